use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("feature dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("relevance {relevance} outside the label domain of {dataset}")]
    LabelOutOfDomain { relevance: u8, dataset: &'static str },

    #[error("unknown query id {0:?}")]
    UnknownQuery(String),

    #[error("query {query:?} has {found} documents, a slate needs {needed}")]
    TooFewDocuments {
        query: String,
        found: usize,
        needed: usize,
    },

    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("no return recorded for execution time {0}")]
    MissingReturn(u32),

    #[error("outcome space of {size} exceeds the enumeration cap {cap}")]
    EnumerationCap { size: u128, cap: u128 },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("dataset {path}: {source}")]
    Dataset {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("output {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("binary format: {0}")]
    Format(String),

    #[error("csv schema: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
