use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("invalid spec `{spec}`: {reason}")]
    Spec { spec: String, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Emit(String),
}

impl CliError {
    /// Process exit status for this error.
    pub fn status(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Spec { .. } => 2,
            CliError::Io { .. } | CliError::Emit(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
