use std::path::PathBuf;

use aggpipe_core::{ConfigError, EngineError, SorterError};

/// Failure of a command, mapped onto the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Unsorted(EngineError),
    #[error("verification failed: {0}")]
    Verify(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
}

impl AppError {
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Config(_) => 2,
            AppError::Unsorted(_) => 3,
            AppError::Verify(_) => 4,
            AppError::Io { .. } | AppError::Parse { .. } => 5,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io { path: path.into(), source }
    }
}

impl From<ConfigError> for AppError {
    fn from(e: ConfigError) -> Self {
        AppError::Config(e.to_string())
    }
}

impl From<SorterError> for AppError {
    fn from(e: SorterError) -> Self {
        AppError::Config(e.to_string())
    }
}

impl From<EngineError> for AppError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::UnsortedInput { .. } => AppError::Unsorted(e),
            EngineError::Sorter(s) => s.into(),
            other => AppError::Config(other.to_string()),
        }
    }
}
