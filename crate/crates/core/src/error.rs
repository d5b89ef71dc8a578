use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("config error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("trajectory too short: need {needed} rows, have {available}")]
    TooShort { needed: usize, available: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("model `{0}` used before fit")]
    Unfitted(String),

    #[error("missing data: {0}")]
    Missing(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("hdf5 error on {path}: {source}")]
    Hdf5 {
        path: PathBuf,
        #[source]
        source: hdf5::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    /// True for errors the caller caused (bad input, bad config, missing files);
    /// false for violated internal invariants.
    pub fn is_user_error(&self) -> bool {
        !matches!(self, Error::Invariant(_))
    }
}
