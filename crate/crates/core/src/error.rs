use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input failed a structural or numerical precondition.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} = {value} is out of range [{min}, {max}]")]
    OutOfRange {
        what: &'static str,
        value: usize,
        min: usize,
        max: usize,
    },

    #[error("basis {basis} is not orthonormal: deviation {deviation:.3e}")]
    NotOrthonormal { basis: usize, deviation: f64 },

    /// The request exceeds what the library knows how to construct.
    #[error("unsupported: {0}")]
    Capability(String),

    #[error("failed to parse {path}: {reason}")]
    Parse { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A numerical routine produced a result that failed its own post-check.
    #[error("computation failed: {0}")]
    Computation(String),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn out_of_range(what: &'static str, value: usize, min: usize, max: usize) -> Self {
        Error::OutOfRange { what, value, min, max }
    }
}
