use std::path::PathBuf;

use rlsk_core::CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Malformed input file.
    #[error("{0}")]
    Format(String),
    /// Flag values that parse but do not fit together.
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 bad flags, 3 solver failure or cap, 4 I/O or
    /// file format, 5 policy does not fit the setting.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(
                CoreError::PolicyMismatch { .. }
                | CoreError::MissingPolicyEntry(_)
                | CoreError::LengthMismatch(..),
            ) => 5,
            CliError::Core(CoreError::EmptyProblem | CoreError::InvalidBits(_)) => 2,
            CliError::Core(_) => 3,
            CliError::Io { .. } | CliError::Format(_) => 4,
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Format(format!("json: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Format(format!("csv: {e}"))
    }
}
