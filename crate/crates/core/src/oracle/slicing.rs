//! Time-sliced phase-space path integral for the quadratic magnetic Hamiltonian.
//!
//! With `N` slices the integration variables are the intermediate positions
//! `x_1..x_{N-1}` and the momenta `p_1..p_N` (dimension `4N - 2`). The action
//! `sum_j p_j (x_j - x_{j-1}) - dt H((x_j + x_{j-1})/2, p_j)` is an exact quadratic
//! `1/2 z^T Q z + b^T z + c`, so the regularized integral
//! `(2 pi)^{-2N} int exp(i S - eps |z|^2 / 2) dz` is a closed Gaussian expression.

use crate::cp::CPQuery;
use crate::error::{Error, Result};
use crate::scalar::{cabs, carg, cexp, cplx, creal, czero, from_usize, real, to_f64, Real, C};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Affine form `sum_i coeffs_i z_i + constant`.
#[derive(Debug, Clone)]
struct Affine<T: Real> {
    coeffs: Vec<(usize, T)>,
    constant: T,
}

impl<T: Real> Affine<T> {
    fn var(i: usize) -> Self {
        Self { coeffs: vec![(i, T::one())], constant: T::zero() }
    }

    fn constant(c: T) -> Self {
        Self { coeffs: Vec::new(), constant: c }
    }

    fn lin(&self, a: T, other: &Self, b: T) -> Self {
        let mut coeffs: Vec<(usize, T)> = self.coeffs.iter().map(|(i, v)| (*i, *v * a)).collect();
        coeffs.extend(other.coeffs.iter().map(|(i, v)| (*i, *v * b)));
        Self { coeffs, constant: self.constant * a + other.constant * b }
    }
}

/// Accumulates `1/2 z^T Q z + b^T z + c` from products of affine forms.
struct Quadratic<T: Real> {
    q: DMatrix<T>,
    b: DVector<T>,
    c: T,
}

impl<T: Real> Quadratic<T> {
    fn new(dim: usize) -> Self {
        Self { q: DMatrix::zeros(dim, dim), b: DVector::zeros(dim), c: T::zero() }
    }

    /// Adds `alpha * u * v`.
    fn add_product(&mut self, alpha: T, u: &Affine<T>, v: &Affine<T>) {
        for &(i, ui) in &u.coeffs {
            for &(j, vj) in &v.coeffs {
                let w = alpha * ui * vj;
                self.q[(i, j)] += w;
                self.q[(j, i)] += w;
            }
        }
        for &(j, vj) in &v.coeffs {
            self.b[j] += alpha * u.constant * vj;
        }
        for &(i, ui) in &u.coeffs {
            self.b[i] += alpha * v.constant * ui;
        }
        self.c += alpha * u.constant * v.constant;
    }
}

/// Slicing value with its regularized and extrapolated companions.
#[derive(Debug, Clone, PartialEq)]
pub struct SlicingResult<T: Real> {
    /// The `eps -> 0` limit, taken analytically in the eigenbasis of `Q`.
    pub value: C<T>,
    /// Values at `eps`, `eps/2`, `eps/4`.
    pub regularized: [C<T>; 3],
    /// Quadratic Richardson extrapolation of `regularized` to `eps = 0`.
    pub richardson: C<T>,
    pub slices: usize,
    pub epsilon: T,
    /// Smallest `|q_j|` of the action's quadratic form.
    pub min_abs_eigenvalue: T,
}

struct Decomposed<T: Real> {
    eig: Vec<T>,
    proj: Vec<T>,
    c: T,
}

fn decompose<T: Real>(q: &CPQuery<T>, slices: usize) -> Decomposed<T> {
    let n = slices;
    let dim = 4 * n - 2;
    let dt = q.t / from_usize(n);
    let half: T = real(0.5);
    let x_idx = |j: usize, c: usize| 2 * (j - 1) + c;
    let p_idx = |j: usize, c: usize| 2 * (n - 1) + 2 * (j - 1) + c;
    let end = [q.y1, q.y2];
    let x = |j: usize, c: usize| -> Affine<T> {
        if j == 0 {
            Affine::constant(T::zero())
        } else if j == n {
            Affine::constant(end[c])
        } else {
            Affine::var(x_idx(j, c))
        }
    };
    let mut s = Quadratic::new(dim);
    let k = q.k;
    for j in 1..=n {
        let p = [Affine::var(p_idx(j, 0)), Affine::var(p_idx(j, 1))];
        let mid = [x(j, 0).lin(half, &x(j - 1, 0), half), x(j, 1).lin(half, &x(j - 1, 1), half)];
        for c in 0..2 {
            s.add_product(T::one(), &p[c], &x(j, c).lin(T::one(), &x(j - 1, c), -T::one()));
            s.add_product(-dt * half, &p[c], &p[c]);
            s.add_product(-dt * k * k * half, &mid[c], &mid[c]);
        }
        // -dt * (-k (x1 p2 - x2 p1))
        s.add_product(dt * k, &mid[0], &p[1]);
        s.add_product(-dt * k, &mid[1], &p[0]);
    }
    let SymmetricEigen { eigenvectors, eigenvalues } = SymmetricEigen::new(s.q);
    let proj = eigenvectors.tr_mul(&s.b);
    Decomposed { eig: eigenvalues.iter().copied().collect(), proj: proj.iter().copied().collect(), c: s.c }
}

/// `(2 pi)^{-1} prod (d_j)^{-1/2} exp(-1/2 sum beta_j^2 / d_j + i c)` with `d_j = eps - i q_j`.
fn gaussian_value<T: Real>(dec: &Decomposed<T>, eps: T) -> Result<C<T>> {
    let half: T = real(0.5);
    let mut log = czero::<T>();
    let mut quad = czero::<T>();
    for (&qj, &bj) in dec.eig.iter().zip(&dec.proj) {
        let d = cplx(eps, -qj);
        if cabs(d) == T::zero() {
            return Err(Error::IncreaseEpsilon { epsilon: to_f64(eps) });
        }
        log += cplx(cabs(d).ln(), carg(d));
        quad += creal(bj * bj) / d;
    }
    let pre = T::one() / T::two_pi();
    Ok(cexp(-log * half - quad * half + cplx(T::zero(), dec.c)) * pre)
}

/// Regularized slicing integral at one `eps > 0`.
pub fn sliced_regularized<T: Real>(q: &CPQuery<T>, slices: usize, epsilon: T) -> Result<C<T>> {
    check_args(q, slices, epsilon)?;
    gaussian_value(&decompose(q, slices), epsilon)
}

fn check_args<T: Real>(q: &CPQuery<T>, slices: usize, epsilon: T) -> Result<()> {
    if slices < 2 {
        return Err(Error::invalid(format!("need at least 2 slices, got {slices}")));
    }
    if !(epsilon > T::zero()) || !epsilon.is_finite() {
        return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(q.t > T::zero()) || ![q.t, q.k, q.y1, q.y2].iter().all(|v| v.is_finite()) {
        return Err(Error::invalid("query must have positive t and finite parameters"));
    }
    Ok(())
}

/// Time-sliced propagator `K_N(t, y | 0, 0)` in the limit `eps -> 0+`.
pub fn time_sliced_propagator<T: Real>(q: &CPQuery<T>, slices: usize, epsilon: T) -> Result<SlicingResult<T>> {
    check_args(q, slices, epsilon)?;
    let dec = decompose(q, slices);
    let scale = dec.eig.iter().fold(T::zero(), |a, v| a.max(v.abs()));
    let min_abs = dec.eig.iter().fold(T::max_value().unwrap_or(scale), |a, v| a.min(v.abs()));
    if min_abs <= scale * T::eps() * real(64.0) {
        return Err(Error::IncreaseEpsilon { epsilon: to_f64(epsilon) });
    }
    let half: T = real(0.5);
    let quarter: T = real(0.25);
    let regularized = [
        gaussian_value(&dec, epsilon)?,
        gaussian_value(&dec, epsilon * half)?,
        gaussian_value(&dec, epsilon * quarter)?,
    ];
    let richardson = (regularized[2] * real::<T>(8.0) - regularized[1] * real::<T>(6.0) + regularized[0]) / real::<T>(3.0);
    // eps -> 0: d_j = -i q_j exactly, principal branch
    let mut value = gaussian_value(&dec, T::zero())?;
    if let Some(y3) = q.y3 {
        value *= crate::cp::free_propagator_3d_factor(q.t, y3);
    }
    Ok(SlicingResult { value, regularized, richardson, slices, epsilon, min_abs_eigenvalue: min_abs })
}
