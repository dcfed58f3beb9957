use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the simulator. Runtime stepping never fails; everything
/// here originates in configuration, calibration, aggregation, or file I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config: `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("aggregation: {0}")]
    Aggregate(String),

    #[error("sweep: {0}")]
    Sweep(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
