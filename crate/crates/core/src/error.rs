use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no usable nodes")]
    NoUsableNodes,

    #[error("non-finite feature value for node {node}")]
    NonFiniteFeature { node: String },

    #[error("node index {index} out of range (N = {node_count})")]
    NodeOutOfRange { index: usize, node_count: usize },

    #[error("hop order must be 1 or 2, got {0}")]
    InvalidHop(u8),

    #[error("empty neighborhood")]
    EmptyNeighborhood,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("feature value {0} outside [-1, 1]")]
    FeatureOutOfDomain(f64),

    #[error("simulation needs {required} qubits, limit is {limit}; use the algebraic path")]
    SizeLimitExceeded { required: usize, limit: usize },

    #[error("internal simulator error: {0}")]
    Internal(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty labeled set")]
    EmptyLabeledSet,

    #[error("non-finite expectation value")]
    NonFiniteExpectation,

    #[error("labeled set size {0} is not a power of two (required in simulator mode)")]
    NotPowerOfTwo(usize),

    #[error("need {needed} unlabeled nodes for negatives, only {available} available")]
    InsufficientUnlabeled { needed: usize, available: usize },

    #[error("need at least {needed} positives, found {found}")]
    TooFewPositives { needed: usize, found: usize },

    #[error("no positive labels")]
    NoPositives,

    #[error("degenerate t-test: differences have zero variance")]
    DegenerateTTest,

    #[error("infeasible degree sequence after {0} attempts")]
    InfeasibleDegreeSequence(usize),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
