use thiserror::Error;

/// Errors produced by the tensor-network, attribution and fitting layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch at mode {mode}: expected {expected}, found {found}")]
    DimensionMismatch {
        mode: usize,
        expected: usize,
        found: usize,
    },

    #[error("expected {expected} lifted inputs, found {found}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("{what} needs {required} entries, limit is {limit}")]
    TooLarge {
        what: &'static str,
        required: u128,
        limit: u128,
    },

    #[error("invalid subset: {0}")]
    InvalidSubset(String),

    #[error("interaction order {k} is out of range for {n} features")]
    OrderOutOfRange { k: usize, n: usize },

    #[error("feature count {n} is outside the supported range 1..={max}")]
    UnsupportedFeatureCount { n: usize, max: usize },

    #[error("interpolation nodes are not distinct (min gap {gap:e})")]
    DegenerateNodes { gap: f64 },

    #[error("linear solve failed: {0}")]
    Solve(String),

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
