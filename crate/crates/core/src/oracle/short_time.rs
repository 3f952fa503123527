//! Short-time normalization: `int G(t, y) phi(y) dy -> phi(0)` as `t -> 0+`.

use crate::cp::{propagator_variant, CPQuery, KernelVariant};
use crate::error::{Error, Result};
use crate::scalar::{cabs, creal, czero, from_usize, real, Real, C};

/// Smooth test function `amplitude * exp(-y1^2 / (2 s1^2) - y2^2 / (2 s2^2))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestBump<T: Real> {
    pub amplitude: T,
    pub sigma1: T,
    pub sigma2: T,
}

impl<T: Real> Default for TestBump<T> {
    fn default() -> Self {
        Self { amplitude: T::one(), sigma1: real(0.6), sigma2: real(0.9) }
    }
}

impl<T: Real> TestBump<T> {
    pub fn eval(&self, y1: T, y2: T) -> T {
        let half: T = real(0.5);
        self.amplitude * (-(y1 * y1 / (self.sigma1 * self.sigma1) + y2 * y2 / (self.sigma2 * self.sigma2)) * half).exp()
    }
}

/// Times at which the integral is sampled before extrapolation.
pub const SHORT_TIMES: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

const GL_X: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
const GL_W: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];

/// `int G(t, y) phi(y) d^2y` in polar coordinates with `u = r^2`: composite 8-point
/// Gauss-Legendre in `u`, trapezoid rule in the angle. Candidate kernels depend on `|y|` only.
fn integrate<T: Real>(variant: KernelVariant, k: T, t: T, phi: &TestBump<T>, panels: usize, angles: usize) -> Result<C<T>> {
    let half: T = real(0.5);
    let s_max = phi.sigma1.max(phi.sigma2);
    let upper = real::<T>(80.0) * s_max * s_max;
    let width = upper / from_usize(panels);
    let dtheta = T::two_pi() / from_usize(angles);
    let (cos_t, sin_t): (Vec<T>, Vec<T>) =
        (0..angles).map(|m| (dtheta * from_usize(m)).cos()).zip((0..angles).map(|m| (dtheta * from_usize(m)).sin())).unzip();
    let mut total = czero::<T>();
    for p in 0..panels {
        let mid = width * (from_usize::<T>(p) + half);
        for (x, w) in GL_X.iter().zip(GL_W.iter()) {
            for sign in [-T::one(), T::one()] {
                let u = mid + sign * real::<T>(*x) * width * half;
                let r = u.sqrt();
                let angular = (0..angles).fold(T::zero(), |acc, m| acc + phi.eval(r * cos_t[m], r * sin_t[m])) * dtheta;
                if angular == T::zero() {
                    continue;
                }
                let g = propagator_variant(&CPQuery::new(t, k, r, T::zero()), variant)?;
                total += g * (angular * real::<T>(*w) * width * half * half);
            }
        }
    }
    Ok(total)
}

fn converged<T: Real>(variant: KernelVariant, k: T, t: T, phi: &TestBump<T>) -> Result<C<T>> {
    let s_max = phi.sigma1.max(phi.sigma2);
    let upper = real::<T>(80.0) * s_max * s_max;
    // about one panel per half oscillation of exp(i u / (2t))
    let rate = T::one() / (t * real(2.0)) + k.abs();
    let mut panels = (crate::scalar::to_f64(rate * upper / T::pi()).ceil() as usize).max(64);
    let mut angles = 64;
    let mut prev = integrate(variant, k, t, phi, panels, angles)?;
    for _ in 0..3 {
        panels *= 2;
        angles *= 2;
        let next = integrate(variant, k, t, phi, panels, angles)?;
        if cabs(next - prev) <= real::<T>(1e-10) * cabs(next).max(T::one()) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Inconclusive(format!("short-time quadrature did not converge at t = {t} for {variant}")))
}

/// Extrapolated `|lim_{t->0} int G phi - phi(0)|`, using `t` in [`SHORT_TIMES`] and
/// `I_0 = (8 I(t/4) - 6 I(t/2) + I(t)) / 3`. Only `template.k` is used.
pub fn short_time_check<T: Real>(variant: KernelVariant, template: &CPQuery<T>, phi: &TestBump<T>) -> Result<T> {
    if !(phi.sigma1 > T::zero() && phi.sigma2 > T::zero()) {
        return Err(Error::invalid("test bump widths must be positive"));
    }
    let values = SHORT_TIMES.iter().map(|&t| converged(variant, template.k, real(t), phi)).collect::<Result<Vec<_>>>()?;
    let limit = (values[2] * real::<T>(8.0) - values[1] * real::<T>(6.0) + values[0]) / real::<T>(3.0);
    Ok(cabs(limit - creal(phi.eval(T::zero(), T::zero()))))
}
