//! The charged particle in a constant magnetic field: operators, preimages,
//! spectrum, determinant, generating functional and propagator.
//!
//! Units are `m = hbar = 1`; `k = q B_z / (m c)` is the cyclotron parameter.

mod operators;
mod preimage;
mod propagator;
mod spectrum;

pub use operators::{build_cp_operators, n_inverse_closed, resolvent_matrix, CPOperators};
pub use preimage::{m_matrix, m_matrix_closed, solve_preimage, MMatrix, PinTarget};
pub use propagator::{
    free_propagator_3d_factor, generating_functional, propagator, propagator_variant, KernelVariant, PhaseSign,
    PrefactorForm, ADJUDICATED_VARIANT,
};
pub use spectrum::{det_idlk, det_product, spectrum_idlk, DetMethod, SpectrumResult, CLUSTER_TOL};

use crate::error::{Error, Result};
use crate::scalar::{sinc, to_f64, Real};

/// Queries with `|cos(kt)|` below this are rejected as caustics.
pub const CAUSTIC_TOL: f64 = 1e-6;

/// A propagator query: end time, cyclotron parameter and endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CPQuery<T: Real> {
    pub t: T,
    pub k: T,
    pub y1: T,
    pub y2: T,
    /// Endpoint along the field; when present the free factor in `x3` is multiplied in.
    pub y3: Option<T>,
}

impl<T: Real> CPQuery<T> {
    pub fn new(t: T, k: T, y1: T, y2: T) -> Self {
        Self { t, k, y1, y2, y3: None }
    }

    pub fn with_y3(mut self, y3: T) -> Self {
        self.y3 = Some(y3);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.t, self.k, self.y1, self.y2].iter().all(|v| v.is_finite()) && self.y3.is_none_or(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("query parameters must be finite"));
        }
        if !(self.t > T::zero()) {
            return Err(Error::invalid(format!("end time must be positive, got {}", self.t)));
        }
        check_caustic(self.t, self.k)
    }
}

/// Rejects `t` within [`CAUSTIC_TOL`] of a zero of `cos(kt)`.
pub fn check_caustic<T: Real>(t: T, k: T) -> Result<()> {
    let c = (k * t).cos();
    if k != T::zero() && to_f64(c).abs() < CAUSTIC_TOL {
        return Err(Error::Caustic {
            t: to_f64(t),
            k: to_f64(k),
            detail: format!("|cos(kt)| = {:e} < {CAUSTIC_TOL:e}", to_f64(c).abs()),
        });
    }
    Ok(())
}

/// `tan(kt)/k`, with the `k -> 0` limit `t` taken analytically.
pub(crate) fn tan_over_k<T: Real>(t: T, k: T) -> T {
    t * sinc(k * t) / (k * t).cos()
}

/// `k / sin(kt)`, with the `k -> 0` limit `1/t`.
pub(crate) fn k_over_sin<T: Real>(t: T, k: T) -> T {
    T::one() / (t * sinc(k * t))
}

/// `k / tan(kt)`, with the `k -> 0` limit `1/t`.
pub(crate) fn k_over_tan<T: Real>(t: T, k: T) -> T {
    (k * t).cos() / (t * sinc(k * t))
}
