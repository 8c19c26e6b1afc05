use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulator, controller and harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A sample time outside the reference's `[0, duration]` window.
    #[error("time {t} s is outside the reference window [0, {duration}] s")]
    OutOfRange { t: f64, duration: f64 },

    /// A non-finite or otherwise unusable runtime input.
    #[error("invalid input: {0}")]
    Input(String),

    /// A configuration value violating its constraint. `key` is the dotted
    /// config path of the offending entry.
    #[error("invalid config value `{key}`: {constraint}")]
    Validation { key: String, constraint: String },

    /// The config file could not be parsed.
    #[error("cannot parse config: {0}")]
    Parse(String),

    /// Metrics were requested for an episode without samples.
    #[error("trace is empty")]
    EmptyTrace,

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn validation(key: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::Validation {
            key: key.into(),
            constraint: constraint.into(),
        }
    }

    /// True for errors caused by the configuration rather than by the run.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Validation { .. } | Error::Parse(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
