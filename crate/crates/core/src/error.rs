use thiserror::Error;

/// Errors raised by the operator calculus, the charged-particle formulas and the oracles.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular operator: {0}")]
    SingularOperator(String),

    #[error("ill-conditioned inverse at t = {t_end}: reciprocal condition {rcond:e} below {threshold:e}")]
    IllConditioned { t_end: f64, rcond: f64, threshold: f64 },

    #[error("caustic: t = {t}, k = {k} lies within tolerance of an excluded time ({detail})")]
    Caustic { t: f64, k: f64, detail: String },

    #[error("degenerate pinning: {0}")]
    DegeneratePinning(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("regularized quadratic form is singular at epsilon = {epsilon:e}; increase epsilon")]
    IncreaseEpsilon { epsilon: f64 },

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("adjudication failed: {0}")]
    Adjudication(String),
}

impl Error {
    /// True for errors caused by the caller's input (validation, domain, caustic).
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_) | Error::Caustic { .. } | Error::Domain(_) | Error::DegeneratePinning(_)
        )
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
