//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config parse error at line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("sampler error: {0}")]
    Sampler(String),

    #[error("overlap error: {0}")]
    Overlap(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("peak extraction error: {0}")]
    Extraction(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("eigensolver failed to converge for a {0}x{0} matrix")]
    Eigensolver(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Shorthand for validation failures; the message names the violated invariant.
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
