use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema references columns missing from the header: {0:?}")]
    SchemaMismatch(Vec<String>),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("row {row}, column '{column}': cannot parse '{value}' as a number")]
    UnparsableNumber {
        row: usize,
        column: String,
        value: String,
    },
    #[error("column '{column}' must be binary but has {count} distinct values")]
    NotBinary { column: String, count: usize },
    #[error("column '{column}': declared modality '{modality}' is not among the observed values {observed:?}")]
    UnknownModality {
        column: String,
        modality: String,
        observed: Vec<String>,
    },
    #[error("column '{column}' has {count} missing values; audit columns must be complete")]
    MissingAuditValues { column: String, count: usize },
    #[error("column '{0}' not found")]
    UnknownColumn(String),
    #[error("column '{column}' has role {role}, expected {expected}")]
    WrongRole {
        column: String,
        role: String,
        expected: &'static str,
    },
    #[error("dataset has no {0} column")]
    MissingRole(&'static str),
    #[error("columns have inconsistent lengths ({0})")]
    Ragged(String),
    #[error("dataset is empty")]
    Empty,
    #[error("{0} group is empty")]
    EmptyGroup(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate rates: {0}")]
    DegenerateRates(String),
    #[error("statistic undefined on {failed} of {total} resamples ({fraction:.3})")]
    UndefinedStatistic {
        failed: usize,
        total: usize,
        fraction: f64,
    },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("model/encoding mismatch: {0}")]
    EncodingMismatch(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
