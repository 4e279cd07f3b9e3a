use thiserror::Error;

/// Errors raised by the matrix kernel and the constructions built on it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("matrix is not symmetric (relative asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("matrix is not antisymmetric (relative symmetric part {0:.3e})")]
    NotAntisymmetric(f64),

    #[error("matrix is not positive semi-definite (smallest eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("matrix is not positive definite (smallest eigenvalue {0:.3e})")]
    NotPositiveDefinite(f64),

    #[error("drift matrix is not positive stable (spectral gap {0:.3e})")]
    NotPositiveStable(f64),

    #[error("eigenvalue iteration did not converge")]
    EigenFailure,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("trace budget exceeded: Tr(D) = {trace} > {budget}")]
    TraceBudgetExceeded { trace: f64, budget: f64 },

    #[error("invalid constant {0}: must be finite and > 1")]
    InvalidConstant(f64),

    #[error("degenerate lambda schedule: values must be positive and strictly increasing")]
    DegenerateSchedule,

    #[error("invalid interval: t2 = {t2} < t1 = {t1}")]
    InvalidInterval { t1: f64, t2: f64 },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("rate {rate} exceeds the asymptotic decay rate (envelope grew by factor {growth:.6})")]
    RateTooLarge { rate: f64, growth: f64 },

    #[error("closed-form 2D constant not applicable: {0}")]
    NotApplicable2D(String),

    #[error("schedules do not share one equilibrium covariance")]
    MixedEquilibria,
}

pub type Result<T> = std::result::Result<T, Error>;
