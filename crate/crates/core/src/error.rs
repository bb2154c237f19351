use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Arff {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    LabelXml { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("every label was removed by the filter")]
    AllLabelsFiltered,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("input contains non-finite values")]
    NonFinite,

    #[error("k = {k} exceeds the {available} available points")]
    TooFewPoints { k: usize, available: usize },

    #[error("cluster id {cluster} out of range for k = {k}")]
    ClusterOutOfRange { cluster: usize, k: usize },

    #[error("label index {index} out of range for q = {labels}")]
    LabelOutOfRange { index: usize, labels: usize },

    #[error("label `{label}` has no minority points")]
    NoMinority { label: String },

    #[error("minority count must be positive")]
    EmptyMinority,

    #[error("training data for `{label}` contains a single class")]
    SingleClass { label: String },

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("method `{method}`, repetition {rep}, fold {fold}: {source}")]
    Fold {
        method: String,
        rep: usize,
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed model file: {0}")]
    ModelFormat(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
