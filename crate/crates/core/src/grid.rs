//! Midpoint quadrature grids over `[0, t)` and complex sampled functions on them.
//!
//! A [`GridFunction`] with `d = 4` stores its components in the order
//! `(x1, p1, x2, p2)`: position and momentum noise of the first planar
//! coordinate, then of the second. This is the block order of the operator
//! matrices `K`, `L` and `N`, so `(1, 0, 0, 0)` pins `x1` and `(0, 0, 1, 0)`
//! pins `x2`.

use crate::error::{Error, Result};
use crate::scalar::{cabs, czero, from_usize, real, Real, C};
use nalgebra::DVector;

/// Uniform midpoint grid on `[0, t_end)` with `n` cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<T: Real> {
    t_end: T,
    n: usize,
}

impl<T: Real> GridSpec<T> {
    pub fn new(t_end: T, n: usize) -> Result<Self> {
        if !(t_end > T::zero()) || !t_end.is_finite() {
            return Err(Error::invalid(format!("grid horizon must be positive and finite, got {t_end}")));
        }
        if n < 2 {
            return Err(Error::invalid(format!("grid needs at least 2 cells, got {n}")));
        }
        Ok(Self { t_end, n })
    }

    pub fn t_end(&self) -> T {
        self.t_end
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Quadrature weight `h = t_end / n`, shared by every node.
    pub fn weight(&self) -> T {
        self.t_end / from_usize(self.n)
    }

    pub fn node(&self, i: usize) -> T {
        (from_usize::<T>(i) + real(0.5)) * self.weight()
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    pub(crate) fn check_same(&self, other: &Self) -> Result<()> {
        if self != other {
            return Err(Error::invalid(format!(
                "grid mismatch: (t = {}, n = {}) vs (t = {}, n = {})",
                self.t_end, self.n, other.t_end, other.n
            )));
        }
        Ok(())
    }
}

/// Builds the midpoint grid; `n >= 2` and `t_end > 0`.
pub fn make_grid<T: Real>(t_end: T, n: usize) -> Result<GridSpec<T>> {
    GridSpec::new(t_end, n)
}

/// Complex samples of a `d`-component function on a grid, component-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<T: Real> {
    grid: GridSpec<T>,
    d: usize,
    values: DVector<C<T>>,
}

impl<T: Real> GridFunction<T> {
    pub fn new(grid: GridSpec<T>, d: usize, values: DVector<C<T>>) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("component count must be positive"));
        }
        if values.len() != d * grid.n() {
            return Err(Error::invalid(format!(
                "expected {} samples for d = {d}, n = {}, got {}",
                d * grid.n(),
                grid.n(),
                values.len()
            )));
        }
        Ok(Self { grid, d, values })
    }

    pub fn zeros(grid: GridSpec<T>, d: usize) -> Self {
        Self { grid, d, values: DVector::from_element(d * grid.n(), czero()) }
    }

    /// Samples `f(component, s)` at every node.
    pub fn from_fn(grid: GridSpec<T>, d: usize, mut f: impl FnMut(usize, T) -> C<T>) -> Self {
        let n = grid.n();
        let values = DVector::from_fn(d * n, |idx, _| f(idx / n, grid.node(idx % n)));
        Self { grid, d, values }
    }

    /// Indicator of `[0, t)` placed in one component, zero elsewhere.
    pub fn indicator(grid: GridSpec<T>, d: usize, component: usize) -> Result<Self> {
        if component >= d {
            return Err(Error::invalid(format!("component {component} out of range for d = {d}")));
        }
        Ok(Self::from_fn(grid, d, |c, _| if c == component { C::new(T::one(), T::zero()) } else { czero() }))
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &DVector<C<T>> {
        &self.values
    }

    pub fn into_values(self) -> DVector<C<T>> {
        self.values
    }

    pub fn component(&self, c: usize) -> &[C<T>] {
        let n = self.grid.n();
        &self.values.as_slice()[c * n..(c + 1) * n]
    }

    pub fn scale(&self, z: C<T>) -> Self {
        Self { grid: self.grid, d: self.d, values: self.values.map(|v| v * z) }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        Ok(Self { grid: self.grid, d: self.d, values: &self.values + &other.values })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        Ok(Self { grid: self.grid, d: self.d, values: &self.values - &other.values })
    }

    /// `sum_i w |f_i|^2`, the squared L2 norm (with conjugation).
    pub fn norm_sq(&self) -> T {
        let w = self.grid.weight();
        self.values.iter().fold(T::zero(), |acc, v| acc + v.norm_sqr()) * w
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, v| acc.max(cabs(*v)))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == T::zero() && v.im == T::zero())
    }

    pub(crate) fn check_shape(&self, other: &Self) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        if self.d != other.d {
            return Err(Error::invalid(format!("component count mismatch: {} vs {}", self.d, other.d)));
        }
        Ok(())
    }
}

/// Bilinear pairing `sum_c sum_i w f_ci g_ci`, without complex conjugation.
pub fn pair<T: Real>(f: &GridFunction<T>, g: &GridFunction<T>) -> Result<C<T>> {
    f.check_shape(g)?;
    let w = f.grid.weight();
    let s = f.values.iter().zip(g.values.iter()).fold(czero(), |acc, (a, b)| acc + *a * *b);
    Ok(s * w)
}
