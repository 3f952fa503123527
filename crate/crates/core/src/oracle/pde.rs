//! Finite-difference Schroedinger residual of a candidate kernel.

use crate::cp::{propagator_variant, CPQuery, KernelVariant};
use crate::error::{Error, Result};
use crate::scalar::{cabs, ci, real, Real, C};

/// Spacing of the 5 x 5 sample patch around the query endpoint.
pub const PATCH_SPACING: f64 = 0.05;

/// Max over a 5 x 5 patch of `|i dG/dt - H G| / (|i dG/dt| + |H G|)`, where
/// `H = 1/2 (-i grad - a)^2` with `a(y) = k (-y2, y1)`, all derivatives by central differences.
pub fn pde_residual<T: Real>(variant: KernelVariant, q: &CPQuery<T>, h_t: T, h_y: T) -> Result<T> {
    if !(h_t > T::zero()) || !(h_y > T::zero()) {
        return Err(Error::invalid("finite-difference steps must be positive"));
    }
    if h_t >= q.t {
        return Err(Error::invalid("time step must be smaller than t"));
    }
    let g = |t: T, y1: T, y2: T| -> Result<C<T>> {
        propagator_variant(&CPQuery { t, k: q.k, y1, y2, y3: None }, variant)
    };
    let two: T = real(2.0);
    let half: T = real(0.5);
    let spacing: T = real(PATCH_SPACING);
    let mut worst = T::zero();
    for a in -2i32..=2 {
        for b in -2i32..=2 {
            let y1 = q.y1 + spacing * real::<T>(f64::from(a));
            let y2 = q.y2 + spacing * real::<T>(f64::from(b));
            let g0 = g(q.t, y1, y2)?;
            let dt = (g(q.t + h_t, y1, y2)? - g(q.t - h_t, y1, y2)?) / (h_t * two);
            let (gxp, gxm) = (g(q.t, y1 + h_y, y2)?, g(q.t, y1 - h_y, y2)?);
            let (gyp, gym) = (g(q.t, y1, y2 + h_y)?, g(q.t, y1, y2 - h_y)?);
            let lap = (gxp + gxm + gyp + gym - g0 * real::<T>(4.0)) / (h_y * h_y);
            let dx = (gxp - gxm) / (h_y * two);
            let dy = (gyp - gym) / (h_y * two);
            let (a1, a2) = (-q.k * y2, q.k * y1);
            let hg = -lap * half + ci::<T>() * (dx * a1 + dy * a2) + g0 * ((a1 * a1 + a2 * a2) * half);
            let lhs = ci::<T>() * dt;
            let denom = cabs(lhs) + cabs(hg);
            if denom > T::zero() {
                worst = worst.max(cabs(lhs - hg) / denom);
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cp::{PhaseSign, PrefactorForm};

    const PLUS: KernelVariant = KernelVariant { prefactor_form: PrefactorForm::KOver, phase_sign: PhaseSign::Plus };
    const MINUS: KernelVariant = KernelVariant { prefactor_form: PrefactorForm::KOver, phase_sign: PhaseSign::Minus };

    #[test]
    fn free_kernel_residual_is_second_order() {
        let q = CPQuery::new(0.7f64, 0.0, 0.2, 0.1);
        let r1 = pde_residual(PLUS, &q, 2e-3, 2e-3).unwrap();
        let r2 = pde_residual(PLUS, &q, 1e-3, 1e-3).unwrap();
        assert!(r1 / r2 > 3.5 && r1 / r2 < 4.5, "{r1} {r2}");
    }

    #[test]
    fn wrong_phase_sign_is_far_off() {
        let q = CPQuery::new(0.7f64, 1.0, 0.2, 0.1);
        let good = pde_residual(PLUS, &q, 1e-3, 1e-3).unwrap();
        let bad = pde_residual(MINUS, &q, 1e-3, 1e-3).unwrap();
        assert!(bad > 100.0 * good, "{good} {bad}");
    }

    #[test]
    fn caustic_inside_stencil_is_reported() {
        let q = CPQuery::new(std::f64::consts::FRAC_PI_2 + 5e-7, 1.0, 0.0, 0.0);
        assert!(matches!(pde_residual(PLUS, &q, 1e-3, 1e-3), Err(Error::Caustic { .. })));
    }
}
