//! Gauss kernel with a shift and Donsker-delta pinnings.

use super::{det_and_inv_sqrt, NexpProduct, TTValue, TTransform, BRANCH_NOTE};
use crate::block::BlockOperator;
use crate::error::{Error, Result};
use crate::grid::{pair, GridFunction};
use crate::operator::complex_eigenvalues;
use crate::scalar::{cabs, cexp, ci, creal, real, Real, C};
use nalgebra::{DMatrix, DVector};

/// A pinning `delta(<eta, .> - y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pin<T: Real> {
    pub eta: GridFunction<T>,
    pub y: T,
}

/// Data of the pinned Gauss kernel: `Nexp(K, L) * exp(i<g, .>) * prod_k delta(<eta_k, .> - y_k)`.
#[derive(Debug, Clone)]
pub struct PinnedGaussSpec<T: Real> {
    pub k: BlockOperator<T>,
    pub l: BlockOperator<T>,
    pub g: GridFunction<T>,
    pub pins: Vec<Pin<T>>,
}

/// Real parts of the pinning matrix may dip this far below zero and still count as non-negative.
pub const PIN_POSITIVITY_TOL: f64 = 1e-12;

/// Evaluator for [`PinnedGaussSpec`] with the operator inverse and pinning matrix precomputed.
#[derive(Debug, Clone)]
pub struct PinnedGauss<T: Real> {
    nexp: NexpProduct<T>,
    g: GridFunction<T>,
    pins: Vec<Pin<T>>,
    n_inv_eta: Vec<GridFunction<T>>,
    m: DMatrix<C<T>>,
    m_sym_inv: DMatrix<C<T>>,
    det_m: C<T>,
    prefactor: C<T>,
}

fn check_pins<T: Real>(pins: &[Pin<T>]) -> Result<()> {
    let norms: Vec<T> = pins.iter().map(|p| p.eta.norm_sq().sqrt()).collect();
    for (i, p) in pins.iter().enumerate() {
        if p.eta.is_zero() || !p.y.is_finite() {
            return Err(Error::invalid(format!("pin {i} has a zero pinning function or non-finite value")));
        }
        for (j, q) in pins.iter().enumerate().skip(i + 1) {
            if cabs(pair(&p.eta, &q.eta)?) > real::<T>(1e-10) * norms[i] * norms[j] {
                return Err(Error::invalid(format!("pinning functions {i} and {j} are not orthogonal")));
            }
        }
    }
    Ok(())
}

impl<T: Real> PinnedGauss<T> {
    pub fn new(spec: &PinnedGaussSpec<T>) -> Result<Self> {
        let grid = *spec.k.grid();
        let d = spec.k.d();
        if spec.g.grid() != &grid || spec.g.d() != d || spec.pins.iter().any(|p| p.eta.grid() != &grid || p.eta.d() != d) {
            return Err(Error::invalid("shift and pinning functions must live on the operator grid"));
        }
        check_pins(&spec.pins)?;
        let nexp = NexpProduct::new(&spec.k, &spec.l)?;
        let n_inv = nexp.n_inverse();
        let n_inv_eta = spec.pins.iter().map(|p| n_inv.apply(&p.eta)).collect::<Result<Vec<_>>>()?;
        let j = spec.pins.len();
        let m = DMatrix::from_fn(j, j, |a, b| pair(&spec.pins[a].eta, &n_inv_eta[b]).expect("shapes checked"));
        let half: T = real(0.5);
        let m_sym = (&m + m.transpose()) * creal(half);

        let (m_sym_inv, det_m, prefactor) = if j == 0 {
            (DMatrix::zeros(0, 0), C::new(T::one(), T::zero()), C::new(T::one(), T::zero()))
        } else {
            let re = m_sym.map(|z| z.re);
            let min_re = re.symmetric_eigenvalues().iter().fold(T::max_value().unwrap_or(T::one()), |a, b| a.min(*b));
            if min_re < real(-PIN_POSITIVITY_TOL) {
                return Err(Error::DegeneratePinning(format!("Re(M) has a negative eigenvalue {min_re}")));
            }
            let eigs = complex_eigenvalues(m_sym.clone())?;
            let scale = eigs.iter().fold(T::zero(), |a, z| a.max(cabs(*z)));
            if eigs.iter().any(|z| cabs(*z) <= scale * real(1e-12) || cabs(*z) == T::zero()) {
                return Err(Error::DegeneratePinning("pinning matrix is singular".into()));
            }
            let (det, inv_sqrt) = det_and_inv_sqrt(&eigs);
            let two_pi: T = T::two_pi();
            let pre = inv_sqrt * (-(two_pi.ln()) * half * crate::scalar::from_usize::<T>(j)).exp();
            let inv = m_sym
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::DegeneratePinning("pinning matrix is singular".into()))?;
            (inv, det, pre)
        };
        let prefactor = prefactor * nexp.prefactor;
        Ok(Self { prefactor, nexp, g: spec.g.clone(), pins: spec.pins.clone(), n_inv_eta, m, m_sym_inv, det_m })
    }

    /// The (unsymmetrized) matrix `<eta_i, N^{-1} eta_j>`.
    pub fn m_matrix(&self) -> &DMatrix<C<T>> {
        &self.m
    }

    pub fn det_m(&self) -> C<T> {
        self.det_m
    }

    pub fn det_nk(&self) -> C<T> {
        self.nexp.det()
    }

    pub fn evaluate(&self, f: &GridFunction<T>) -> Result<TTValue<T>> {
        Ok(TTValue {
            value: self.eval(f)?,
            det_nk: Some(self.nexp.det()),
            det_m: (!self.pins.is_empty()).then_some(self.det_m),
            branch_note: BRANCH_NOTE.into(),
        })
    }
}

impl<T: Real> TTransform<T> for PinnedGauss<T> {
    fn eval(&self, f: &GridFunction<T>) -> Result<C<T>> {
        let shifted = f.add(&self.g)?;
        let w = self.nexp.n_inverse().apply(&shifted)?;
        let half: T = real(0.5);
        let gauss = pair(&shifted, &w)? * (-half);
        if self.pins.is_empty() {
            return Ok(self.prefactor * cexp(gauss));
        }
        // symmetrized u_k = i y_k + (<eta_k, N^-1 F> + <N^-1 eta_k, F>) / 2
        let u = DVector::from_iterator(
            self.pins.len(),
            self.pins.iter().zip(&self.n_inv_eta).map(|(p, ne)| {
                let a = pair(&p.eta, &w).expect("shapes checked");
                let b = pair(ne, &shifted).expect("shapes checked");
                ci::<T>() * p.y + (a + b) * half
            }),
        );
        let quad = (u.transpose() * &self.m_sym_inv * &u)[(0, 0)];
        Ok(self.prefactor * cexp(gauss + quad * half))
    }
}

pub fn tt_pinned_gauss<T: Real>(spec: &PinnedGaussSpec<T>, f: &GridFunction<T>) -> Result<TTValue<T>> {
    PinnedGauss::new(spec)?.evaluate(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cplx;
    use crate::grid::make_grid;
    use crate::wn::tt_donsker;

    #[test]
    fn no_pins_no_operators_is_plain_gaussian() {
        let g = make_grid(1.0f64, 20).unwrap();
        let zero = BlockOperator::zeros(g, 1);
        let spec = PinnedGaussSpec { k: zero.clone(), l: zero, g: GridFunction::zeros(g, 1), pins: vec![] };
        let f = GridFunction::from_fn(g, 1, |_, s| cplx(s, 1.0 - s));
        let v = tt_pinned_gauss(&spec, &f).unwrap();
        assert!((v.value - cexp(pair(&f, &f).unwrap() * -0.5)).norm() < 1e-14);
        assert!(v.det_m.is_none());
        let one = tt_pinned_gauss(&spec, &GridFunction::zeros(g, 1)).unwrap();
        assert_eq!(one.value, C::new(1.0, 0.0));
    }

    #[test]
    fn single_pin_reduces_to_donsker() {
        let g = make_grid(1.0f64, 20).unwrap();
        let zero = BlockOperator::zeros(g, 1);
        let eta = GridFunction::from_fn(g, 1, |_, s| cplx(1.0 + s * s, 0.0));
        let spec = PinnedGaussSpec { k: zero.clone(), l: zero, g: GridFunction::zeros(g, 1), pins: vec![Pin { eta: eta.clone(), y: 0.4 }] };
        let f = GridFunction::from_fn(g, 1, |_, s| cplx(s.cos(), 0.3 * s));
        let v = tt_pinned_gauss(&spec, &f).unwrap().value;
        let d = tt_donsker(&eta, 0.4, &f).unwrap();
        assert!((v - d).norm() < 1e-12 * d.norm());
    }

    #[test]
    fn non_orthogonal_pins_are_rejected() {
        let g = make_grid(1.0f64, 10).unwrap();
        let zero = BlockOperator::zeros(g, 1);
        let eta = GridFunction::indicator(g, 1, 0).unwrap();
        let spec = PinnedGaussSpec {
            k: zero.clone(),
            l: zero,
            g: GridFunction::zeros(g, 1),
            pins: vec![Pin { eta: eta.clone(), y: 0.0 }, Pin { eta, y: 1.0 }],
        };
        assert!(matches!(PinnedGauss::new(&spec), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn negative_pinning_matrix_is_degenerate() {
        let g = make_grid(1.0f64, 10).unwrap();
        // N = Id - 2 Id = -Id makes <eta, N^-1 eta> negative
        let k = BlockOperator::identity(g, 1).scale(cplx(-2.0, 0.0));
        let spec = PinnedGaussSpec {
            k,
            l: BlockOperator::zeros(g, 1),
            g: GridFunction::zeros(g, 1),
            pins: vec![Pin { eta: GridFunction::indicator(g, 1, 0).unwrap(), y: 0.0 }],
        };
        assert!(matches!(PinnedGauss::new(&spec), Err(Error::DegeneratePinning(_))));
    }
}
