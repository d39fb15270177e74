use thiserror::Error;

/// Errors produced by profile construction, simulation, transforms and fits.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the valid domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The value is in the wrong state for the operation (e.g. an
    /// unnormalized profile where a normalized one is required).
    #[error("state error: {0}")]
    State(String),

    /// An internal consistency check failed.
    #[error("internal error: {0}")]
    Internal(String),

    /// A file could not be parsed; `line` is 1-based and includes the header.
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn state(msg: impl Into<String>) -> Self {
        Error::State(msg.into())
    }
}
