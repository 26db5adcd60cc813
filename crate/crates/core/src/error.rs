use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: wrong lengths, non-finite entries, bad sparse structure.
    #[error("structural error: {0}")]
    Structural(String),

    /// A documented precondition of an operation does not hold.
    #[error("contract violation: {0}")]
    Contract(String),

    /// An instance field violates a modelling invariant (delta > 0, bound consistency).
    #[error("invalid field `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    /// Exhaustive machinery refused to run because the instance is too large.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn validation(field: &str, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

pub(crate) fn ensure_finite(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Numeric(format!("{what} is not finite ({value})")))
    }
}
