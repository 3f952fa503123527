use super::{k_over_sin, k_over_tan, n_inverse_closed, tan_over_k, CPQuery, CAUSTIC_TOL};
use crate::error::{Error, Result};
use crate::grid::{pair, GridFunction};
use crate::scalar::{cexp, ci, cplx, creal, csqrt, czero, real, sinc, to_f64, Real, C};
use crate::wn::TTValue;
use std::fmt;
use std::str::FromStr;

/// Prefactor of the kernel: `k / (2 pi i sin kt)` or `kt / (2 pi i sin kt)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrefactorForm {
    KOver,
    KtOver,
}

/// Sign of the quadratic phase `exp(+- i k |y|^2 / (2 tan kt))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PhaseSign {
    Plus,
    Minus,
}

/// One of the four candidate closed forms of the propagator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KernelVariant {
    pub prefactor_form: PrefactorForm,
    pub phase_sign: PhaseSign,
}

/// The variant selected by the oracle adjudication (see `oracle::adjudicate`).
pub const ADJUDICATED_VARIANT: KernelVariant =
    KernelVariant { prefactor_form: PrefactorForm::KOver, phase_sign: PhaseSign::Plus };

impl KernelVariant {
    pub const ALL: [KernelVariant; 4] = [
        KernelVariant { prefactor_form: PrefactorForm::KOver, phase_sign: PhaseSign::Plus },
        KernelVariant { prefactor_form: PrefactorForm::KOver, phase_sign: PhaseSign::Minus },
        KernelVariant { prefactor_form: PrefactorForm::KtOver, phase_sign: PhaseSign::Plus },
        KernelVariant { prefactor_form: PrefactorForm::KtOver, phase_sign: PhaseSign::Minus },
    ];

    pub fn prefactor_label(&self) -> &'static str {
        match self.prefactor_form {
            PrefactorForm::KOver => "k_over",
            PrefactorForm::KtOver => "kt_over",
        }
    }

    pub fn phase_label(&self) -> &'static str {
        match self.phase_sign {
            PhaseSign::Plus => "plus",
            PhaseSign::Minus => "minus",
        }
    }
}

impl fmt::Display for KernelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.prefactor_label(), self.phase_label())
    }
}

impl FromStr for KernelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.to_string() == s)
            .ok_or_else(|| Error::invalid(format!("unknown kernel variant '{s}' (expected e.g. k_over/plus)")))
    }
}

fn check_query<T: Real>(q: &CPQuery<T>) -> Result<()> {
    q.validate()?;
    let x = q.k * q.t;
    if x.abs() > T::one() && to_f64(x.sin()).abs() < CAUSTIC_TOL {
        return Err(Error::Caustic {
            t: to_f64(q.t),
            k: to_f64(q.k),
            detail: format!("sin(kt) = {:e} vanishes", to_f64(x.sin())),
        });
    }
    Ok(())
}

/// `(2 pi i t)^{-1/2} exp(i y3^2 / (2t))`, the free kernel along the field.
pub fn free_propagator_3d_factor<T: Real>(t: T, y3: T) -> C<T> {
    let root = csqrt(cplx(T::zero(), T::two_pi() * t));
    cexp(cplx(T::zero(), y3 * y3 / (t * real(2.0)))) / root
}

/// Kernel value from the pinning vector `u` and the Gaussian exponent.
fn assemble<T: Real>(q: &CPQuery<T>, variant: KernelVariant, u: [C<T>; 2], gauss: C<T>) -> C<T> {
    let two_pi_i = cplx(T::zero(), T::two_pi());
    let pre = match variant.prefactor_form {
        PrefactorForm::KOver => creal(k_over_sin(q.t, q.k)),
        PrefactorForm::KtOver => creal(T::one() / sinc(q.k * q.t)),
    } / two_pi_i;
    let sign = match variant.phase_sign {
        PhaseSign::Plus => T::one(),
        PhaseSign::Minus => -T::one(),
    };
    // (1/2i) (k / tan kt) u^T u
    let quad = (u[0] * u[0] + u[1] * u[1]) * k_over_tan(q.t, q.k) / cplx(T::zero(), real(2.0));
    let mut v = pre * cexp(gauss + quad * sign);
    if let Some(y3) = q.y3 {
        v *= free_propagator_3d_factor(q.t, y3);
    }
    v
}

/// Closed-form kernel `K(t, y | 0, 0)` for a chosen variant.
pub fn propagator_variant<T: Real>(q: &CPQuery<T>, variant: KernelVariant) -> Result<C<T>> {
    check_query(q)?;
    let i = ci::<T>();
    Ok(assemble(q, variant, [i * q.y1, i * q.y2], czero()))
}

/// Closed-form kernel with the adjudicated variant.
pub fn propagator<T: Real>(q: &CPQuery<T>) -> Result<C<T>> {
    propagator_variant(q, ADJUDICATED_VARIANT)
}

/// Generating functional at a test function `xi` (four components on a grid over `[0, t)`).
pub fn generating_functional<T: Real>(q: &CPQuery<T>, xi: &GridFunction<T>) -> Result<TTValue<T>> {
    check_query(q)?;
    let grid = *xi.grid();
    if xi.d() != 4 || (grid.t_end() - q.t).abs() > q.t * real(1e-12) {
        return Err(Error::invalid("xi must have 4 components sampled on a grid over [0, t)"));
    }
    let i = ci::<T>();
    let (u, gauss) = if xi.is_zero() {
        ([i * q.y1, i * q.y2], czero())
    } else {
        let n_inv = n_inverse_closed(grid, q.k)?;
        let w = n_inv.apply(xi)?;
        let half: T = real(0.5);
        let etas = [GridFunction::indicator(grid, 4, 0)?, GridFunction::indicator(grid, 4, 2)?];
        let mut u = [i * q.y1, i * q.y2];
        for (uk, eta) in u.iter_mut().zip(&etas) {
            let a = pair(eta, &w)?;
            let b = pair(&n_inv.apply(eta)?, xi)?;
            *uk += (a + b) * half;
        }
        (u, -pair(xi, &w)? * half)
    };
    let value = assemble(q, ADJUDICATED_VARIANT, u, gauss);
    let c = (q.k * q.t).cos();
    let m = cplx(T::zero(), tan_over_k(q.t, q.k));
    Ok(TTValue {
        value,
        det_nk: Some(creal(c * c)),
        det_m: Some(m * m),
        branch_note: format!("closed form, variant {ADJUDICATED_VARIANT}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn magnitude_at_origin() {
        let v = propagator(&CPQuery::new(1.0f64, 1.0, 0.0, 0.0)).unwrap();
        let want = 1.0 / (2.0 * std::f64::consts::PI * 1f64.sin());
        assert!((v.norm() - want).abs() < 1e-14);
        assert!((v - cplx(0.0, -want)).norm() < 1e-14);
        for variant in KernelVariant::ALL {
            let v = propagator_variant(&CPQuery::new(1.0f64, 1.0, 0.0, 0.0), variant).unwrap();
            assert!((v.norm() - want).abs() < 1e-14);
        }
    }

    #[test]
    fn weak_field_matches_free_kernel() {
        let (t, y) = (1.0f64, [1.0f64, 0.0]);
        let v = propagator(&CPQuery::new(t, 1e-4, y[0], y[1])).unwrap();
        let r2 = y[0] * y[0] + y[1] * y[1];
        let free = cexp(cplx(0.0, r2 / (2.0 * t))) / cplx(0.0, 2.0 * std::f64::consts::PI * t);
        assert!((v - free).norm() / free.norm() < 1e-6);
        let exact = propagator(&CPQuery::new(t, 0.0, y[0], y[1])).unwrap();
        assert!((exact - free).norm() < 1e-15);
    }

    #[test]
    fn third_dimension_factor() {
        let q = CPQuery::new(0.8f64, 1.2, 0.3, -0.1);
        let base = propagator(&q).unwrap();
        let with = propagator(&q.with_y3(0.5)).unwrap();
        let factor = csqrt(cplx(0.0, 2.0 * std::f64::consts::PI * 0.8)).inv() * cexp(cplx(0.0, 0.25 / 1.6));
        assert!((with - base * factor).norm() < 1e-14);
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn caustics_are_rejected() {
        let q = CPQuery::new(1.5707963f64, 1.0, 0.0, 0.0);
        assert!(matches!(propagator(&q), Err(Error::Caustic { .. })));
        let q = CPQuery::new(std::f64::consts::PI, 1.0, 0.0, 0.0);
        assert!(matches!(propagator(&q), Err(Error::Caustic { .. })));
    }

    #[test]
    fn generating_functional_at_zero_is_propagator() {
        let q = CPQuery::new(0.9f64, 1.1, 0.4, -0.3);
        let g = make_grid(q.t, 32).unwrap();
        let v = generating_functional(&q, &GridFunction::zeros(g, 4)).unwrap();
        assert_eq!(v.value, propagator(&q).unwrap());
        let bad = make_grid(2.0, 32).unwrap();
        assert!(generating_functional(&q, &GridFunction::zeros(bad, 4)).is_err());
    }

    #[test]
    fn variant_parsing() {
        for v in KernelVariant::ALL {
            assert_eq!(v.to_string().parse::<KernelVariant>().unwrap(), v);
        }
        assert!("k/plus".parse::<KernelVariant>().is_err());
    }
}
