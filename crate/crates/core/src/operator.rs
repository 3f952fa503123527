//! Dense discretizations of the integral operators on `L^2([0, t))`.
//!
//! An [`OperatorMatrix`] stores the *action* matrix of an operator on the
//! midpoint grid: `(Op f)_i = sum_j entries_ij f_j`, with the quadrature
//! weight already folded into kernel-type operators. Real and imaginary
//! parts are kept as separate real matrices so that products of the
//! (overwhelmingly real or purely imaginary) operators in this crate run
//! through the real matrix-multiply kernels.

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::scalar::{cabs, cplx, czero, Real, C};
use nalgebra::{DMatrix, Schur};
use std::str::FromStr;

/// The named operators of the charged-particle model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    /// Multiplication by the indicator of `[0, t)`; the identity on the grid.
    Indicator,
    /// `(B f)(s) = int_0^s f(r) dr`.
    B,
    /// Dual of `B` under the bilinear pairing: `(B* f)(s) = int_s^t f(r) dr`.
    BStar,
    /// `(A f)(s) = int_s^t int_0^r f(tau) dtau dr`, kernel `t - max(s, tau)`.
    A,
}

impl FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "indicator" | "1" => Ok(Self::Indicator),
            "B" | "b" => Ok(Self::B),
            "Bstar" | "bstar" | "B*" => Ok(Self::BStar),
            "A" | "a" => Ok(Self::A),
            other => Err(Error::invalid(format!("unknown operator name '{other}'"))),
        }
    }
}

/// Dense complex operator on a grid, stored as optional real and imaginary parts
/// (`None` means an exactly zero part).
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix<T: Real> {
    grid: GridSpec<T>,
    re: Option<DMatrix<T>>,
    im: Option<DMatrix<T>>,
}

/// Discretizes one of the named operators on `grid`.
///
/// `B` uses the half-cell self contribution, so that the discrete `B*` is
/// exactly the transpose of the discrete `B`.
pub fn discretize<T: Real>(kind: OperatorKind, grid: &GridSpec<T>) -> OperatorMatrix<T> {
    let n = grid.n();
    let h = grid.weight();
    let half = h * crate::scalar::real(0.5);
    let m = match kind {
        OperatorKind::Indicator => DMatrix::identity(n, n),
        OperatorKind::B => DMatrix::from_fn(n, n, |i, j| {
            if j < i {
                h
            } else if j == i {
                half
            } else {
                T::zero()
            }
        }),
        OperatorKind::BStar => DMatrix::from_fn(n, n, |i, j| {
            if j > i {
                h
            } else if j == i {
                half
            } else {
                T::zero()
            }
        }),
        OperatorKind::A => {
            let t = grid.t_end();
            DMatrix::from_fn(n, n, |i, j| h * (t - grid.node(i.max(j))))
        }
    };
    OperatorMatrix::from_real(*grid, m)
}

fn add_opt<T: Real>(a: Option<DMatrix<T>>, b: Option<DMatrix<T>>) -> Option<DMatrix<T>> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => Some(a + b),
    }
}

fn sub_opt<T: Real>(a: Option<DMatrix<T>>, b: Option<DMatrix<T>>) -> Option<DMatrix<T>> {
    match (a, b) {
        (a, None) => a,
        (None, Some(b)) => Some(-b),
        (Some(a), Some(b)) => Some(a - b),
    }
}

fn mul_opt<T: Real>(a: &Option<DMatrix<T>>, b: &Option<DMatrix<T>>) -> Option<DMatrix<T>> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a * b),
        _ => None,
    }
}

fn scale_opt<T: Real>(a: &Option<DMatrix<T>>, s: T) -> Option<DMatrix<T>> {
    if s == T::zero() {
        return None;
    }
    a.as_ref().map(|m| m * s)
}

fn norm1<T: Real>(m: &DMatrix<C<T>>) -> T {
    (0..m.ncols())
        .map(|j| m.column(j).iter().fold(T::zero(), |acc, v| acc + cabs(*v)))
        .fold(T::zero(), |a, b| a.max(b))
}

fn norm1_real<T: Real>(m: &DMatrix<T>) -> T {
    (0..m.ncols())
        .map(|j| m.column(j).iter().fold(T::zero(), |acc, v| acc + v.abs()))
        .fold(T::zero(), |a, b| a.max(b))
}

/// Eigenvalues of a complex matrix through its Schur form.
pub(crate) fn complex_eigenvalues<T: Real>(m: DMatrix<C<T>>) -> Result<Vec<C<T>>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let eps: C<T> = cplx(T::eps(), T::zero());
    let schur = Schur::try_new(m, eps.re, 100 * n.max(10))
        .ok_or_else(|| Error::Numerical(format!("Schur iteration did not converge for n = {n}")))?;
    let (_, t) = schur.unpack();
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        if i + 1 < n && cabs(t[(i + 1, i)]) > T::zero() {
            // 2x2 block left in the quasi-triangular form
            let a = t[(i, i)];
            let b = t[(i, i + 1)];
            let c = t[(i + 1, i)];
            let d = t[(i + 1, i + 1)];
            let half: C<T> = cplx(crate::scalar::real(0.5), T::zero());
            let tr = a + d;
            let det = a * d - b * c;
            let disc = crate::scalar::csqrt(tr * tr * half * half - det);
            out.push(tr * half + disc);
            out.push(tr * half - disc);
            i += 2;
        } else {
            out.push(t[(i, i)]);
            i += 1;
        }
    }
    Ok(out)
}

impl<T: Real> OperatorMatrix<T> {
    pub fn from_real(grid: GridSpec<T>, re: DMatrix<T>) -> Self {
        assert_eq!(re.shape(), (grid.n(), grid.n()), "operator shape must match grid");
        Self { grid, re: Some(re), im: None }
    }

    pub fn from_parts(grid: GridSpec<T>, re: Option<DMatrix<T>>, im: Option<DMatrix<T>>) -> Self {
        for m in re.iter().chain(im.iter()) {
            assert_eq!(m.shape(), (grid.n(), grid.n()), "operator shape must match grid");
        }
        Self { grid, re, im }
    }

    pub fn from_complex(grid: GridSpec<T>, m: &DMatrix<C<T>>) -> Self {
        assert_eq!(m.shape(), (grid.n(), grid.n()), "operator shape must match grid");
        let re = m.map(|z| z.re);
        let im = m.map(|z| z.im);
        let re = if re.iter().all(|v| *v == T::zero()) { None } else { Some(re) };
        let im = if im.iter().all(|v| *v == T::zero()) { None } else { Some(im) };
        Self { grid, re, im }
    }

    pub fn zeros(grid: GridSpec<T>) -> Self {
        Self { grid, re: None, im: None }
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn re_part(&self) -> Option<&DMatrix<T>> {
        self.re.as_ref()
    }

    pub fn im_part(&self) -> Option<&DMatrix<T>> {
        self.im.as_ref()
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_none() && self.im.is_none()
    }

    pub fn entry(&self, i: usize, j: usize) -> C<T> {
        let re = self.re.as_ref().map_or(T::zero(), |m| m[(i, j)]);
        let im = self.im.as_ref().map_or(T::zero(), |m| m[(i, j)]);
        cplx(re, im)
    }

    pub fn to_complex(&self) -> DMatrix<C<T>> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| self.entry(i, j))
    }

    pub fn transpose(&self) -> Self {
        Self { grid: self.grid, re: self.re.as_ref().map(|m| m.transpose()), im: self.im.as_ref().map(|m| m.transpose()) }
    }

    pub fn scale(&self, z: C<T>) -> Self {
        // (a + ib)(R + iI) = (aR - bI) + i(aI + bR)
        let re = sub_opt(scale_opt(&self.re, z.re), scale_opt(&self.im, z.im));
        let im = add_opt(scale_opt(&self.im, z.re), scale_opt(&self.re, z.im));
        Self { grid: self.grid, re, im }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.grid, other.grid, "operator grids differ");
        Self {
            grid: self.grid,
            re: add_opt(self.re.clone(), other.re.clone()),
            im: add_opt(self.im.clone(), other.im.clone()),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.grid, other.grid, "operator grids differ");
        Self {
            grid: self.grid,
            re: sub_opt(self.re.clone(), other.re.clone()),
            im: sub_opt(self.im.clone(), other.im.clone()),
        }
    }

    /// `self + z * Id`.
    pub fn add_identity(&self, z: C<T>) -> Self {
        let n = self.n();
        let shift = |part: &Option<DMatrix<T>>, s: T| -> Option<DMatrix<T>> {
            if s == T::zero() {
                return part.clone();
            }
            let mut m = part.clone().unwrap_or_else(|| DMatrix::zeros(n, n));
            for i in 0..n {
                m[(i, i)] += s;
            }
            Some(m)
        };
        Self { grid: self.grid, re: shift(&self.re, z.re), im: shift(&self.im, z.im) }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.grid, other.grid, "operator grids differ");
        // (R1 + iI1)(R2 + iI2) = R1R2 - I1I2 + i(R1I2 + I1R2)
        let re = sub_opt(mul_opt(&self.re, &other.re), mul_opt(&self.im, &other.im));
        let im = add_opt(mul_opt(&self.re, &other.im), mul_opt(&self.im, &other.re));
        Self { grid: self.grid, re, im }
    }

    /// Matrix-vector product on raw node samples.
    pub fn apply_slice(&self, x: &[C<T>]) -> Vec<C<T>> {
        let n = self.n();
        assert_eq!(x.len(), n);
        let mut out = vec![czero::<T>(); n];
        let xr: Vec<T> = x.iter().map(|z| z.re).collect();
        let xi: Vec<T> = x.iter().map(|z| z.im).collect();
        if let Some(m) = &self.re {
            for j in 0..n {
                let (a, b) = (xr[j], xi[j]);
                if a == T::zero() && b == T::zero() {
                    continue;
                }
                for (i, o) in out.iter_mut().enumerate() {
                    let e = m[(i, j)];
                    o.re += e * a;
                    o.im += e * b;
                }
            }
        }
        if let Some(m) = &self.im {
            for j in 0..n {
                let (a, b) = (xr[j], xi[j]);
                if a == T::zero() && b == T::zero() {
                    continue;
                }
                for (i, o) in out.iter_mut().enumerate() {
                    let e = m[(i, j)];
                    o.re -= e * b;
                    o.im += e * a;
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> T {
        let n = self.n();
        let mut best = T::zero();
        for j in 0..n {
            for i in 0..n {
                best = best.max(cabs(self.entry(i, j)));
            }
        }
        best
    }

    /// Absolute row sums, one per row.
    pub fn row_abs_sums(&self) -> Vec<T> {
        let n = self.n();
        (0..n).map(|i| (0..n).fold(T::zero(), |acc, j| acc + cabs(self.entry(i, j)))).collect()
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        let sym = |m: &DMatrix<T>| {
            let n = m.nrows();
            (0..n).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol))
        };
        self.re.as_ref().is_none_or(sym) && self.im.as_ref().is_none_or(sym)
    }

    /// Inverse together with the reciprocal 1-norm condition number.
    pub fn inverse(&self) -> Result<(Self, T)> {
        let n = self.n();
        let singular = || Error::SingularOperator(format!("dense block of size {n} is singular"));
        match (&self.re, &self.im) {
            (None, None) => Err(singular()),
            (Some(r), None) => {
                let inv = r.clone().try_inverse().ok_or_else(singular)?;
                let rcond = T::one() / (norm1_real(r) * norm1_real(&inv));
                Ok((Self { grid: self.grid, re: Some(inv), im: None }, rcond))
            }
            (None, Some(m)) => {
                // (iM)^{-1} = -i M^{-1}
                let inv = m.clone().try_inverse().ok_or_else(singular)?;
                let rcond = T::one() / (norm1_real(m) * norm1_real(&inv));
                Ok((Self { grid: self.grid, re: None, im: Some(-inv) }, rcond))
            }
            _ => {
                let m = self.to_complex();
                let inv = m.clone().try_inverse().ok_or_else(singular)?;
                let rcond = T::one() / (norm1(&m) * norm1(&inv));
                Ok((Self::from_complex(self.grid, &inv), rcond))
            }
        }
    }

    pub fn determinant(&self) -> C<T> {
        match (&self.re, &self.im) {
            (None, None) => czero(),
            (Some(r), None) => cplx(r.clone().lu().determinant(), T::zero()),
            _ => self.to_complex().lu().determinant(),
        }
    }

    /// All eigenvalues. Real symmetric (or purely imaginary symmetric) operators
    /// use the symmetric eigensolver, everything else the complex Schur form.
    pub fn eigenvalues(&self) -> Result<Vec<C<T>>> {
        let scale = self.max_abs().max(T::eps());
        let tol = scale * crate::scalar::real(1e-12);
        match (&self.re, &self.im) {
            (None, None) => Ok(vec![czero(); self.n()]),
            (Some(r), None) if self.is_symmetric(tol) => {
                Ok(r.clone().symmetric_eigenvalues().iter().map(|v| cplx(*v, T::zero())).collect())
            }
            (None, Some(m)) if self.is_symmetric(tol) => {
                Ok(m.clone().symmetric_eigenvalues().iter().map(|v| cplx(T::zero(), *v)).collect())
            }
            (Some(r), None) => {
                let schur = Schur::try_new(r.clone(), T::eps(), 100 * self.n().max(10))
                    .ok_or_else(|| Error::Numerical("real Schur iteration did not converge".into()))?;
                Ok(schur.complex_eigenvalues().iter().copied().collect())
            }
            _ => complex_eigenvalues(self.to_complex()),
        }
    }
}
