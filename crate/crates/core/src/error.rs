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

    #[error("{path}: malformed header: {reason}")]
    MalformedHeader { path: PathBuf, reason: String },

    #[error("{path}: row {row} has {found} fields, expected {expected}")]
    RaggedRow {
        path: PathBuf,
        row: usize,
        found: usize,
        expected: usize,
    },

    #[error("{path}: row {row}, column {column}: cannot parse {cell:?} as a number")]
    NonNumeric {
        path: PathBuf,
        row: usize,
        column: usize,
        cell: String,
    },

    #[error("{path}: row {row}, column {column}: value {value} is not finite")]
    NonFinite {
        path: PathBuf,
        row: usize,
        column: usize,
        value: f64,
    },

    #[error("duplicate {kind} id {id:?}")]
    DuplicateId { kind: &'static str, id: String },

    #[error("unknown node id {id:?} (line {line})")]
    UnknownNode { id: String, line: usize },

    #[error("self-loop on node {id:?} (line {line})")]
    SelfLoop { id: String, line: usize },

    #[error("duplicate edge {a:?} - {b:?} (line {line})")]
    DuplicateEdge { a: String, b: String, line: usize },

    #[error("edge weight must be positive, got {weight} (line {line})")]
    NonPositiveWeight { weight: f64, line: usize },

    #[error("no sample ids in common between features and phenotype")]
    EmptyIntersection,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("phenotype is constant")]
    ConstantPhenotype,

    #[error("p-value {0} outside the accepted range")]
    PValueOutOfRange(f64),

    #[error("stability index undefined: {0}")]
    UndefinedStability(String),

    #[error("no admissible model: every grid point selects none or all of the features")]
    NoAdmissibleModel,

    #[error("report serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
