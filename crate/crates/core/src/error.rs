use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing column `{0}` in csv header")]
    MissingColumn(String),
    #[error("no parseable rows ({dropped} dropped)")]
    NoParseableRows { dropped: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("empty data: {0}")]
    EmptyData(String),
    #[error("feature `{0}` has zero variance")]
    ZeroVariance(String),
    #[error("schema mismatch: expected {expected} features, got {got}")]
    SchemaMismatch { expected: usize, got: usize },
    #[error("missing feature `{0}` in model schema")]
    MissingFeature(String),
    #[error("training diverged at epoch {epoch}: {detail}")]
    Divergence { epoch: usize, detail: String },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("too many features for exact enumeration: {0} (limit {1})")]
    TooManyFeatures(usize, usize),
    #[error("unsupported model file version {0}")]
    UnsupportedVersion(u64),
    #[error("corrupt model file: {0}")]
    CorruptModel(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerics rather than the data or the caller.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Divergence { .. } | Error::NonFinite(_))
    }
}
