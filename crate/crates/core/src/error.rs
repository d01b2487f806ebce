use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("whitening failed: {0}")]
    Whitening(String),

    #[error("covariate subset of size {size} has no pairs; at least 2 indices are required")]
    DegenerateSubset { size: usize },

    #[error("sample size {n} is too small; at least {required} observations are required")]
    SampleSize { n: usize, required: usize },

    #[error("moment input error: {0}")]
    Moment(String),

    #[error("data error{}: {message}", row.map(|r| format!(" at row {r}")).unwrap_or_default())]
    Data { row: Option<usize>, message: String },

    #[error("selection error: {0}")]
    Selection(String),

    #[error("bootstrap failed: {0}")]
    Bootstrap(String),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn data(message: impl Into<String>) -> Self {
        Error::Data { row: None, message: message.into() }
    }

    pub(crate) fn data_at(row: usize, message: impl Into<String>) -> Self {
        Error::Data { row: Some(row), message: message.into() }
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { key: key.into(), message: message.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            Error::Io { .. } => 1,
            _ => 3,
        }
    }
}
