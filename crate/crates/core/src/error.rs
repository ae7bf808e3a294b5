use std::path::PathBuf;

/// Errors produced by the optimizer, the queue model and the experiment tooling.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("candidate coordinate {index} = {value} outside [{lower}, {upper}]")]
    OutOfBounds {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("candidate has dimension {got}, decision space has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unstable queue: k*mu = {capacity} must exceed lambda = {lambda} (mu = {mu})")]
    Unstable { mu: f64, capacity: f64, lambda: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("elite memory is empty")]
    EmptyMemory,

    #[error("no macro-replication results to aggregate")]
    NoResults,

    #[error("{path}:{line}: {message}")]
    Config {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
