//! Numerical U-functional probe and a Monte-Carlo check of the Gaussian expectation.

use super::TTransform;
use crate::block::BlockOperator;
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::scalar::{cabs, cplx, czero, real, to_f64, Real, C};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Growth-bound fit `|F(z xi)| <= C exp(D |z|^2 <xi, xi>)` and an analyticity residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UFuncReport<T: Real> {
    pub fitted_c: T,
    pub fitted_d: T,
    /// Largest excess of `|F|` over the fitted bound, relative to the bound; 0 when it holds.
    pub max_violation: T,
    /// Largest relative Cauchy-Riemann defect `|dF/dx + i dF/dy| / (|dF/dx| + |dF/dy|)` over the samples.
    pub analyticity_residual: T,
}

/// Probes `F(z) = tt(z xi)` on the sampled points.
pub fn ufunc_probe<T: Real>(tt: &impl TTransform<T>, xi: &GridFunction<T>, z_samples: &[C<T>]) -> Result<UFuncReport<T>> {
    let norm = xi.norm_sq();
    let at = |z: C<T>| -> Result<C<T>> {
        tt.eval(&xi.scale(z)).map_err(|e| Error::Numerical(format!("evaluator failed at z = {z}: {e}")))
    };
    let f0 = cabs(at(czero())?);
    let c = f0.max(T::one());
    let mut values = Vec::with_capacity(z_samples.len());
    let mut d = T::zero();
    for &z in z_samples {
        let v = cabs(at(z)?);
        if !v.is_finite() {
            return Err(Error::Numerical(format!("evaluator is not finite at z = {z}")));
        }
        let r2 = z.norm_sqr() * norm;
        if r2 > T::zero() && v > c {
            d = d.max((v.ln() - c.ln()) / r2);
        }
        values.push((z, v, r2));
    }
    let slack: T = real::<T>(64.0) * T::eps();
    let mut violation = T::zero();
    for &(_, v, r2) in &values {
        let bound = c * (d * r2).exp();
        let excess = (v - bound) / bound;
        if excess > slack {
            violation = violation.max(excess);
        }
    }
    let mut cr = T::zero();
    for &(z, _, _) in &values {
        let step: T = real::<T>(1e-5) * cabs(z).max(T::one());
        let dx = (at(z + cplx(step, T::zero()))? - at(z - cplx(step, T::zero()))?) / (step * real(2.0));
        let dy = (at(z + cplx(T::zero(), step))? - at(z - cplx(T::zero(), step))?) / (step * real(2.0));
        let scale = cabs(dx) + cabs(dy);
        if scale > T::zero() {
            cr = cr.max(cabs(dx + dy * cplx(T::zero(), T::one())) / scale);
        }
    }
    Ok(UFuncReport { fitted_c: c, fitted_d: d, max_violation: violation, analyticity_residual: cr })
}

/// Monte-Carlo estimate of `E[exp(-<w, K w>)]` for standard Gaussian `w`, returned with its standard error.
///
/// Only the eigenmodes of `K` with non-zero eigenvalue are sampled; the target is
/// `det(Id + 2K)^{-1/2}`.
pub fn mc_gauss_expectation<T: Real>(k: &BlockOperator<T>, samples: usize, seed: u64) -> Result<(T, T)> {
    if samples < 1000 {
        return Err(Error::invalid(format!("need at least 1000 samples, got {samples}")));
    }
    let dense = k.to_dense();
    if dense.iter().any(|z| z.im != T::zero()) {
        return Err(Error::Domain("Monte-Carlo expectation needs a real operator".into()));
    }
    let re = dense.map(|z| z.re);
    let tol = real::<T>(1e-10) * re.iter().fold(T::one(), |a, b| a.max(b.abs()));
    if (0..re.nrows()).any(|i| (0..i).any(|j| (re[(i, j)] - re[(j, i)]).abs() > tol)) {
        return Err(Error::Domain("Monte-Carlo expectation needs a symmetric operator".into()));
    }
    let eigs = re.symmetric_eigenvalues();
    let half: T = real(0.5);
    let mut modes = Vec::new();
    for &e in eigs.iter() {
        if e <= -half || e > tol {
            return Err(Error::Domain(format!("eigenvalue {e} of K lies outside (-1/2, 0]")));
        }
        if e.abs() > tol {
            modes.push(to_f64(e));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut mean, mut m2) = (0.0f64, 0.0f64);
    for i in 0..samples {
        let x: f64 = modes
            .iter()
            .map(|&kappa| {
                let g: f64 = StandardNormal.sample(&mut rng);
                kappa * g * g
            })
            .sum();
        let v = (-x).exp();
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let var = m2 / (samples - 1) as f64;
    Ok((real(mean), real((var / samples as f64).sqrt())))
}
