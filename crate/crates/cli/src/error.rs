use std::path::PathBuf;

use thiserror::Error;

/// Failures of a CLI command, each mapped to a fixed exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at {path}: {reason}")]
    Config { path: String, reason: String },
    #[error("invalid arguments: {0}")]
    Usage(String),
    #[error("scenario invariants failed: {0}")]
    Invariant(String),
    #[error("numerical failure: {0}")]
    Numeric(#[source] qfluct::Error),
    #[error("verification failed: {0} case(s)")]
    VerifyFailed(usize),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Usage(_) => 2,
            CliError::Invariant(_) => 3,
            CliError::Numeric(_) => 4,
            CliError::VerifyFailed(_) | CliError::Io { .. } => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<qfluct::Error> for CliError {
    fn from(e: qfluct::Error) -> Self {
        match e {
            qfluct::Error::Config { path, reason } => CliError::Config { path, reason },
            other => CliError::Numeric(other),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
