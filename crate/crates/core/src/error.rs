//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failures reported by numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// Two grids or bases that must agree do not.
    #[error("incompatible shapes: {0}")]
    Incompatible(String),
    /// The discretization cannot resolve the requested quantity.
    #[error("under-resolved: {0}")]
    UnderResolved(String),
    /// The operation is only implemented for a subset of inputs (for example `d = 1`).
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// A function evaluation produced a non-finite value.
    #[error("non-finite value: {0}")]
    NonFinite(String),
    /// An I/O or parse failure while (de)serializing.
    #[error("serialization: {0}")]
    Serialization(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
