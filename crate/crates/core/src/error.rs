use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error at line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("unknown emotion label `{0}`")]
    UnknownEmotion(String),
    #[error("invalid feature file: {0}")]
    InvalidFeatureFile(String),
    #[error("feature file truncated: {0}")]
    Truncated(String),
    #[error("dimension mismatch: expected {expected}, found {found} for `{id}`")]
    DimensionMismatch { id: String, expected: usize, found: usize },
    #[error("zero-norm feature vector for `{0}`")]
    ZeroVector(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("unknown painting id `{0}`")]
    UnknownPainting(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("painting `{0}` is not emotionally biased")]
    NotBiased(String),
    #[error("corpus too small: {found} paintings, need at least {needed}")]
    CorpusTooSmall { found: usize, needed: usize },
    #[error("taxonomy mismatch: {0}")]
    TaxonomyMismatch(String),
    #[error("invalid record: {0}")]
    InvalidRecord(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
