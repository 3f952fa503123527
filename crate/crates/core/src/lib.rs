//! Discretized white-noise calculus for a charged particle in a constant magnetic field:
//! block operators on midpoint grids, T-transforms of Gaussian and pinned functionals,
//! the closed-form propagator and independent numerical oracles for it.
//!
//! Everything is generic over the real scalar (`f32` or `f64`); the `*64` aliases
//! below fix it to `f64`.

pub mod block;
pub mod cp;
pub mod error;
pub mod grid;
pub mod operator;
pub mod oracle;
pub mod scalar;
pub mod wn;

pub use block::{block_assemble, block_invert, Block, BlockOperator};
pub use cp::{
    build_cp_operators, check_caustic, det_idlk, generating_functional, m_matrix, n_inverse_closed, propagator,
    propagator_variant, spectrum_idlk, CPQuery, DetMethod, KernelVariant, PhaseSign, PrefactorForm, ADJUDICATED_VARIANT,
};
pub use error::{Error, Result};
pub use grid::{make_grid, pair, GridFunction, GridSpec};
pub use operator::{discretize, OperatorKind, OperatorMatrix};
pub use oracle::{adjudicate, pde_residual, short_time_check, time_sliced_propagator, OracleReport};
pub use scalar::{Complex, Real};
pub use wn::{
    mc_gauss_expectation, tt_donsker, tt_gauss_kernel, tt_linear_shift, tt_nexp_product, tt_pinned_gauss, ufunc_probe,
    PinnedGaussSpec, TTValue, TTransform,
};

pub type C64 = Complex<f64>;
pub type GridSpec64 = GridSpec<f64>;
pub type GridFunction64 = GridFunction<f64>;
pub type OperatorMatrix64 = OperatorMatrix<f64>;
pub type BlockOperator64 = BlockOperator<f64>;
pub type CPQuery64 = CPQuery<f64>;
pub type TTValue64 = TTValue<f64>;
pub type PinnedGaussSpec64 = PinnedGaussSpec<f64>;
pub type OracleReport64 = OracleReport<f64>;
