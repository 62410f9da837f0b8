use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The data cannot support the requested estimate (zero variance, empty group, ...).
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// A matrix could not be inverted to working precision.
    #[error("singular or ill-conditioned matrix (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    /// An iterative solver failed to meet its tolerance.
    #[error("no convergence: {0}")]
    NoConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn degenerate(msg: impl Into<String>) -> Error {
    Error::DegenerateData(msg.into())
}
