use std::path::PathBuf;

use emobalance_core::Error as CoreError;
use emobalance_service::ServiceError;

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Failures, grouped by the process exit code they map to.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad input or parameters (exit 1).
    #[error("{0}")]
    Validation(String),
    /// Reading or writing files, or talking to the service (exit 2).
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Network(String),
    /// The annotation service answered with a 4xx/5xx status.
    #[error("service returned {status}: {message}")]
    Api { status: u16, message: String },
    /// A check that should never fail did (exit 3).
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Service(#[from] ServiceError),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io { .. } | CliError::Network(_) => 2,
            CliError::Api { status, .. } if *status >= 500 => 3,
            CliError::Api { .. } => 1,
            CliError::Invariant(_) => 3,
            CliError::Core(e) => match e {
                CoreError::Io { .. } => 2,
                _ => 1,
            },
            CliError::Service(e) => match e {
                ServiceError::Log { .. } => 2,
                ServiceError::CorruptLog { .. } => 3,
                _ => 1,
            },
        }
    }
}

impl From<reqwest::Error> for CliError {
    fn from(e: reqwest::Error) -> Self {
        CliError::Network(e.to_string())
    }
}
