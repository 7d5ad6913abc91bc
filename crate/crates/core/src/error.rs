//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failure modes of the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input violates a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),
    /// Adaptive quadrature stopped before reaching the requested tolerance.
    #[error("quadrature did not converge: estimated error {achieved:e} above requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },
    /// Any other numerical breakdown (bracketing failure, non-finite values).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
