use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the simulation, estimation and harness layers.
#[derive(Debug, Error)]
pub enum Error {
    /// A function argument is outside its documented domain.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A configuration is internally inconsistent (non-PSD correlation, bad weight, ...).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Malformed input file content.
    #[error("{path}: row {row}: {message}")]
    Input {
        path: String,
        row: usize,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user-supplied input or configuration.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Argument(_) | Error::Config(_) | Error::Input { .. } | Error::Serde(_)
        )
    }
}
