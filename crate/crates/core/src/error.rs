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

    #[error("malformed CSV at row {row}: {message}")]
    Csv { row: usize, message: String },

    #[error("invalid label at row {row}: {value}")]
    InvalidLabel { row: usize, value: String },

    #[error("invalid sensitive attribute at row {row}: {value}")]
    InvalidSensitive { row: usize, value: String },

    #[error("invalid header: {0}")]
    Header(String),

    #[error("row count mismatch: expected {expected}, found {found}")]
    RowCountMismatch { expected: usize, found: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("table classifier is bound to a different dataset")]
    ForeignDataset,

    #[error("instance index {index} out of range for dataset of {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("treatment test unsupported for table classifiers")]
    TreatmentUnsupported,

    #[error("invalid ensemble weights: {0}")]
    InvalidWeights(String),

    #[error("malformed linear program: {0}")]
    MalformedProgram(String),

    #[error("metric {kind} is undefined for member {member}")]
    UndefinedMetric { kind: String, member: usize },

    #[error("metric {0} is not linear in the mixture weights and cannot be constrained")]
    NonlinearConstraint(String),

    #[error("solution failed verification: {0}")]
    Verification(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
