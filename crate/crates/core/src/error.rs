use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IkfError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed CSV: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("response column `{0}` not found")]
    MissingResponse(String),
    #[error("non-numeric value {value:?} at line {line}, column `{column}`")]
    NonNumeric {
        line: u64,
        column: String,
        value: String,
    },
    #[error("non-finite value {value:?} at line {line}, column `{column}`")]
    NonFinite {
        line: u64,
        column: String,
        value: String,
    },
    #[error("classification response must be 0 or 1, found {value} at {location}")]
    BadLabel { location: String, value: f64 },
    #[error("invalid dataset: {0}")]
    InvalidData(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("candidate pool is empty")]
    EmptyPool,
    #[error("evaluation set is empty")]
    EmptyEvaluationSet,
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable {0} is missing from the ranking")]
    MissingFromRanking(usize),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, IkfError>;

impl IkfError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IkfError::Io {
            path: path.into(),
            source,
        }
    }
}
