use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Clone, Error)]
pub enum EwdError {
    /// A distribution parameter violates its positivity/finiteness constraint.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An argument lies outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// An intermediate quantity under/overflowed beyond recovery.
    #[error("numerical overflow: {0}")]
    NumericalOverflow(String),

    /// Input data failed validation.
    #[error("invalid data: {0}")]
    InvalidData(String),

    /// An iterative solver did not converge.
    #[error("did not converge: {0}")]
    NonConvergence(String),

    /// A quadrature could not certify the requested tolerance.
    #[error("quadrature failed: {0}")]
    Quadrature(String),

    /// A matrix is too ill-conditioned to use.
    #[error("ill-conditioned: {0}")]
    IllConditioned(String),

    /// File I/O or parsing failure.
    #[error("data error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, EwdError>;
