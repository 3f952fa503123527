use super::build_cp_operators;
use crate::block::{block_invert, BlockOperator};
use crate::error::{Error, Result};
use crate::grid::{make_grid, GridSpec};
use crate::scalar::{cabs, cone, creal, from_usize, real, Real, C};
use std::str::FromStr;

/// Discrete spectrum of `Id + L (Id + K)^{-1}` next to the closed-form eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult<T: Real> {
    /// All discrete eigenvalues, farthest from 1 first.
    pub eigenvalues: Vec<C<T>>,
    /// `v_n = 1 - k^2 (t / ((n - 1/2) pi))^2` for `n = 1..=count`.
    pub closed_form: Vec<T>,
    /// Size of the discrete eigenvalue cluster matched to each `v_n`.
    pub multiplicities: Vec<usize>,
    /// The discrete eigenvalue representing each cluster.
    pub matched: Vec<C<T>>,
}

/// Relative distance under which discrete eigenvalues count as one cluster.
pub const CLUSTER_TOL: f64 = 1e-6;

fn idlk<T: Real>(grid: GridSpec<T>, k: T) -> Result<BlockOperator<T>> {
    let ops = build_cp_operators(grid, k);
    let id = BlockOperator::identity(grid, 4);
    let idk_inv = block_invert(&id.add(&ops.k))?;
    Ok(id.add(&ops.l.mul(&idk_inv)))
}

pub fn spectrum_idlk<T: Real>(grid: GridSpec<T>, k: T, count: usize) -> Result<SpectrumResult<T>> {
    if count == 0 {
        return Err(Error::invalid("count must be at least 1"));
    }
    let mut eigenvalues = idlk(grid, k)?
        .eigenvalues()
        .map_err(|e| Error::Numerical(format!("eigensolve of Id + L(Id+K)^-1 failed on n = {}: {e}", grid.n())))?;
    let one = cone::<T>();
    eigenvalues.sort_by(|a, b| cabs(b - one).partial_cmp(&cabs(a - one)).unwrap_or(std::cmp::Ordering::Equal));

    let t = grid.t_end();
    let pi = T::pi();
    let closed_form: Vec<T> = (1..=count)
        .map(|n| {
            let lam = t / ((from_usize::<T>(n) - real(0.5)) * pi);
            T::one() - k * k * lam * lam
        })
        .collect();

    let tol: T = real(CLUSTER_TOL);
    let mut multiplicities = Vec::with_capacity(count);
    let mut matched = Vec::with_capacity(count);
    let mut idx = 0;
    while matched.len() < count && idx < eigenvalues.len() {
        let lead = eigenvalues[idx];
        let size = eigenvalues[idx..].iter().take_while(|v| cabs(**v - lead) <= tol * cabs(lead).max(T::one())).count();
        matched.push(lead);
        multiplicities.push(size);
        idx += size;
    }
    Ok(SpectrumResult { eigenvalues, closed_form, multiplicities, matched })
}

/// How [`det_idlk`] evaluates the determinant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetMethod {
    /// Truncated infinite product with a tail estimate; `order` is the number of factors.
    Product,
    /// Determinant of the discretized operator; `order` is the grid size.
    Dense,
}

impl FromStr for DetMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "product" => Ok(Self::Product),
            "dense" => Ok(Self::Dense),
            other => Err(Error::invalid(format!("unknown determinant method '{other}'"))),
        }
    }
}

/// `prod_{n <= order} (1 - x^2 / ((n - 1/2)^2 pi^2))^2` times the estimated tail, `x = kt`.
pub fn det_product<T: Real>(t: T, k: T, order: usize) -> Result<T> {
    if order == 0 {
        return Err(Error::invalid("product order must be at least 1"));
    }
    let x = k * t;
    if x == T::zero() {
        return Ok(T::one());
    }
    let pi2 = T::pi() * T::pi();
    let half: T = real(0.5);
    let mut prod = T::one();
    for n in 1..=order {
        let m = from_usize::<T>(n) - half;
        prod *= T::one() - x * x / (m * m * pi2);
    }
    // sum_{n > N} 1/(n - 1/2)^2 = trigamma(N + 1/2) ~ 1/z + 1/(2z^2) + 1/(6z^3)
    let z = from_usize::<T>(order) + half;
    let trigamma = T::one() / z + half / (z * z) + T::one() / (real::<T>(6.0) * z * z * z);
    let tail = (-x * x * trigamma / pi2).exp();
    let root = prod * tail;
    Ok(root * root)
}

/// `det(Id + L (Id + K)^{-1})`, which equals `cos(kt)^2` in the continuum.
pub fn det_idlk<T: Real>(t: T, k: T, method: DetMethod, order: usize) -> Result<C<T>> {
    if !(t > T::zero()) || !t.is_finite() || !k.is_finite() {
        return Err(Error::invalid("t must be positive and k finite"));
    }
    match method {
        DetMethod::Product => det_product(t, k, order).map(creal),
        DetMethod::Dense => {
            if k == T::zero() {
                return Ok(cone());
            }
            Ok(idlk(make_grid(t, order)?, k)?.determinant())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_determinant_is_cos_squared() {
        let d = det_product(1.0f64, 1.0, 10_000).unwrap();
        assert!((d - 1f64.cos().powi(2)).abs() < 1e-9, "{d}");
        assert!((d - 0.291927).abs() < 1e-6);
        assert_eq!(det_product(1.0f64, 0.0, 5).unwrap(), 1.0);
        let near = det_product(std::f64::consts::FRAC_PI_2 - 1e-4, 1.0, 10_000).unwrap();
        assert!(near < 1e-7);
    }

    #[test]
    fn dense_determinant_and_spectrum_small_grid() {
        let d = det_idlk(1.0f64, 1.0, DetMethod::Dense, 256).unwrap();
        assert!((d.re - 1f64.cos().powi(2)).abs() < 1e-3 && d.im.abs() < 1e-12, "{d}");
        assert_eq!(det_idlk(1.0f64, 0.0, DetMethod::Dense, 16).unwrap(), cone());

        let g = make_grid(1.0f64, 256).unwrap();
        let s = spectrum_idlk(g, 1.0, 3).unwrap();
        assert_eq!(s.eigenvalues.len(), 4 * 256);
        assert_eq!(s.multiplicities, vec![2, 2, 2]);
        assert!((s.closed_form[0] - (1.0 - 4.0 / (std::f64::consts::PI).powi(2))).abs() < 1e-15);
        for (m, v) in s.matched.iter().zip(&s.closed_form) {
            assert!((m.re - v).abs() < 1e-4 * v.abs(), "{m} vs {v}");
        }
        let s0 = spectrum_idlk(g, 0.0, 1).unwrap();
        assert!(s0.eigenvalues.iter().all(|v| *v == cone()));
        assert!(matches!(spectrum_idlk(g, 1.0, 0), Err(Error::InvalidArgument(_))));
    }
}
