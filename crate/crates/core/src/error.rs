use std::path::PathBuf;

use crate::sampler::ChainTrace;

/// Errors produced across signal synthesis, objective evaluation, sampling
/// and the experiment harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("signal has zero power")]
    ZeroPowerSignal,

    #[error("noise variance must be nonnegative, got {0}")]
    NegativeVariance(f64),

    #[error("prefix length {requested} out of range 1..={available}")]
    PrefixOutOfRange { requested: usize, available: usize },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("normal matrix is singular (rank-deficient basis) at pivot {pivot}")]
    RankDeficient { pivot: usize },

    #[error("Stein trace estimator is undefined for sigma = 0")]
    UndefinedEstimator,

    #[error("annealing schedule is empty")]
    EmptySchedule,

    #[error("no runs to select from")]
    EmptyRunSet,

    #[error("chain aborted at iteration {iter}: non-finite objective")]
    ChainAborted { iter: usize, trace: Box<ChainTrace> },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
