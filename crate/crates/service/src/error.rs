use std::path::PathBuf;

pub type ServiceResult<T> = std::result::Result<T, ServiceError>;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("{0}")]
    Validation(String),
    #[error("unknown {kind} `{id}`")]
    NotFound { kind: &'static str, id: String },
    #[error("{0}")]
    Conflict(String),
    #[error("event log {path}: {source}")]
    Log {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("event log {path} line {line}: {message}")]
    CorruptLog { path: PathBuf, line: usize, message: String },
    #[error(transparent)]
    Core(#[from] emobalance_core::Error),
}

impl ServiceError {
    pub(crate) fn not_found(kind: &'static str, id: impl Into<String>) -> Self {
        ServiceError::NotFound { kind, id: id.into() }
    }

    pub(crate) fn log(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ServiceError::Log { path: path.into(), source }
    }

    /// HTTP status for this error.
    pub fn status(&self) -> u16 {
        match self {
            ServiceError::Validation(_) => 400,
            ServiceError::NotFound { .. } => 404,
            ServiceError::Conflict(_) => 409,
            _ => 500,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::Validation(_) => "validation",
            ServiceError::NotFound { .. } => "not_found",
            ServiceError::Conflict(_) => "conflict",
            _ => "internal",
        }
    }
}
