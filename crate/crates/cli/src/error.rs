use thiserror::Error;

use qgsw_core::Error as CoreError;

/// Failure of one command, carrying its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Domain(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("maximizer did not converge: {0}")]
    NotConverged(String),
    #[error("{0}")]
    NumericalAbort(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io(_) => 1,
            Self::Domain(_) => 2,
            Self::Verification(_) => 3,
            Self::NotConverged(_) => 4,
            Self::NumericalAbort(_) => 5,
            Self::Usage(_) => 64,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::Io(_) | CoreError::Json(_) | CoreError::Csv(_) | CoreError::Dump { .. } => Self::Io(msg),
            CoreError::NonFinite { .. } => Self::NumericalAbort(msg),
            _ => Self::Domain(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Io(e.to_string())
    }
}
