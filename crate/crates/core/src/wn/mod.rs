//! T-transforms of Gaussian white-noise distributions, evaluated on grid-sampled test functions.
//!
//! Every evaluator implements [`TTransform`]. Engines that need an operator
//! inverse ([`GaussKernel`], [`NexpProduct`], [`PinnedGauss`]) factor it once
//! at construction, so repeated evaluation only costs a matrix-vector product.

mod pinned;
mod probe;

pub use pinned::{tt_pinned_gauss, Pin, PinnedGauss, PinnedGaussSpec};
pub use probe::{mc_gauss_expectation, ufunc_probe, UFuncReport};

use crate::block::{block_invert, BlockOperator};
use crate::error::{Error, Result};
use crate::grid::{pair, GridFunction};
use crate::scalar::{cabs, carg, cexp, cplx, csqrt, czero, ci, real, to_f64, Real, C};

/// Value of a T-transform together with the determinant pieces that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct TTValue<T: Real> {
    pub value: C<T>,
    /// `det(Id + L (Id + K)^{-1})`, or `det(Id + K)` for a plain Gauss kernel.
    pub det_nk: Option<C<T>>,
    /// Determinant of the symmetrized pinning matrix.
    pub det_m: Option<C<T>>,
    pub branch_note: String,
}

/// Anything that maps a test function to a complex number.
pub trait TTransform<T: Real> {
    fn eval(&self, f: &GridFunction<T>) -> Result<C<T>>;
}

impl<T: Real, F> TTransform<T> for F
where
    F: Fn(&GridFunction<T>) -> Result<C<T>>,
{
    fn eval(&self, f: &GridFunction<T>) -> Result<C<T>> {
        self(f)
    }
}

pub(crate) const BRANCH_NOTE: &str =
    "principal root per eigenvalue; equals the continuation from the unperturbed operator along the linear homotopy";

/// `log det` and `det^{-1/2}` from eigenvalues, as sums of principal logarithms.
pub(crate) fn det_and_inv_sqrt<T: Real>(eigs: &[C<T>]) -> (C<T>, C<T>) {
    let log = eigs.iter().fold(czero::<T>(), |acc, v| acc + cplx(cabs(*v).ln(), carg(*v)));
    let half: T = real(0.5);
    (cexp(log), cexp(-log * half))
}

fn minus_half<T: Real>() -> C<T> {
    cplx(real(-0.5), T::zero())
}

fn check_shapes<T: Real>(op: &BlockOperator<T>, f: &GridFunction<T>) -> Result<()> {
    if f.grid() != op.grid() || f.d() != op.d() {
        return Err(Error::invalid("test function does not live on the operator's grid"));
    }
    Ok(())
}

/// Gauss kernel with symmetric `K`: `det(Id+K)^{-1/2} exp(-1/2 <f, (Id+K)^{-1} f>)`.
#[derive(Debug, Clone)]
pub struct GaussKernel<T: Real> {
    inv: BlockOperator<T>,
    det: C<T>,
    prefactor: C<T>,
}

impl<T: Real> GaussKernel<T> {
    pub fn new(k: &BlockOperator<T>) -> Result<Self> {
        let tol = k.max_abs().max(T::one()) * real(1e-10);
        if !k.is_symmetric(tol) {
            return Err(Error::invalid("Gauss kernel operator must be symmetric under the bilinear pairing"));
        }
        let idk = BlockOperator::identity(*k.grid(), k.d()).add(k);
        let inv = block_invert(&idk)?;
        let eigs = idk.eigenvalues()?;
        let (det, prefactor) = det_and_inv_sqrt(&eigs);
        Ok(Self { inv, det, prefactor })
    }

    pub fn det(&self) -> C<T> {
        self.det
    }
}

impl<T: Real> TTransform<T> for GaussKernel<T> {
    fn eval(&self, f: &GridFunction<T>) -> Result<C<T>> {
        check_shapes(&self.inv, f)?;
        let q = pair(f, &self.inv.apply(f)?)?;
        Ok(self.prefactor * cexp(q * minus_half()))
    }
}

pub fn tt_gauss_kernel<T: Real>(k: &BlockOperator<T>, f: &GridFunction<T>) -> Result<TTValue<T>> {
    let engine = GaussKernel::new(k)?;
    Ok(TTValue { value: engine.eval(f)?, det_nk: Some(engine.det), det_m: None, branch_note: BRANCH_NOTE.into() })
}

/// Product of normalized exponentials:
/// `det(Id + L (Id+K)^{-1})^{-1/2} exp(-1/2 <f, (Id+K+L)^{-1} f>)`.
#[derive(Debug, Clone)]
pub struct NexpProduct<T: Real> {
    n_inv: BlockOperator<T>,
    det: C<T>,
    prefactor: C<T>,
}

/// Determinants smaller than this in modulus are treated as a caustic.
pub const DET_ZERO_TOL: f64 = 1e-12;

impl<T: Real> NexpProduct<T> {
    pub fn new(k: &BlockOperator<T>, l: &BlockOperator<T>) -> Result<Self> {
        let grid = *k.grid();
        if l.grid() != &grid || l.d() != k.d() {
            return Err(Error::invalid("K and L must share grid and block count"));
        }
        let id = BlockOperator::identity(grid, k.d());
        let idk = id.add(k);
        let idk_inv = block_invert(&idk)?;
        let (det, prefactor) = if l.is_zero() {
            (C::new(T::one(), T::zero()), C::new(T::one(), T::zero()))
        } else {
            det_and_inv_sqrt(&id.add(&l.mul(&idk_inv)).eigenvalues()?)
        };
        if cabs(det) < real(DET_ZERO_TOL) {
            return Err(Error::Caustic {
                t: to_f64(grid.t_end()),
                k: f64::NAN,
                detail: format!("det(Id + L(Id+K)^-1) = {det} vanishes"),
            });
        }
        let n_inv = block_invert(&idk.add(l))?;
        Ok(Self { n_inv, det, prefactor })
    }

    pub fn det(&self) -> C<T> {
        self.det
    }

    pub fn n_inverse(&self) -> &BlockOperator<T> {
        &self.n_inv
    }
}

impl<T: Real> TTransform<T> for NexpProduct<T> {
    fn eval(&self, f: &GridFunction<T>) -> Result<C<T>> {
        check_shapes(&self.n_inv, f)?;
        let q = pair(f, &self.n_inv.apply(f)?)?;
        Ok(self.prefactor * cexp(q * minus_half()))
    }
}

pub fn tt_nexp_product<T: Real>(k: &BlockOperator<T>, l: &BlockOperator<T>, f: &GridFunction<T>) -> Result<TTValue<T>> {
    let engine = NexpProduct::new(k, l)?;
    Ok(TTValue { value: engine.eval(f)?, det_nk: Some(engine.det), det_m: None, branch_note: BRANCH_NOTE.into() })
}

/// `T(Phi * exp(i<g, .> + c))(f) = T Phi(f + g) * exp(c)`.
pub fn tt_linear_shift<T: Real>(
    base: &impl TTransform<T>,
    g: &GridFunction<T>,
    c: C<T>,
    f: &GridFunction<T>,
) -> Result<C<T>> {
    Ok(base.eval(&f.add(g)?)? * cexp(c))
}

/// Donsker's delta `delta(<eta, .> - y)`:
/// `(2 pi <eta,eta>)^{-1/2} exp(-(i<eta,f> - y)^2 / (2 <eta,eta>) - 1/2 <f,f>)`.
pub fn tt_donsker<T: Real>(eta: &GridFunction<T>, y: T, f: &GridFunction<T>) -> Result<C<T>> {
    let a = pair(eta, eta)?;
    if !(cabs(a) > eta.norm_sq() * real(1e-14)) || eta.is_zero() {
        return Err(Error::invalid("Donsker delta needs <eta, eta> != 0"));
    }
    let two_pi: T = T::two_pi();
    let pre = C::new(T::one(), T::zero()) / csqrt(a * two_pi);
    let s = ci::<T>() * pair(eta, f)? - C::new(y, T::zero());
    let half: T = real(0.5);
    Ok(pre * cexp(-(s * s) / (a * real::<T>(2.0)) - pair(f, f)? * half))
}
