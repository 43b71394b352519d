use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    CaseParse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("islanded grid: reduced nodal system is singular")]
    IslandedGrid,

    #[error("no safe anomaly edge: every single-edge outage islands the grid")]
    NoSafeAnomalyEdge,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("coincident nodes {0} and {1}")]
    CoincidentNodes(usize, usize),

    #[error("non-symmetric matrix at ({0}, {1})")]
    NonSymmetric(usize, usize),

    #[error("non-binary adjacency entry at ({0}, {1})")]
    NonBinary(usize, usize),

    #[error("too large for exact Cheeger: {0} nodes (limit 16)")]
    TooLargeForCheeger(usize),

    #[error("insufficient history")]
    InsufficientHistory,

    #[error("insufficient warm-up: anomaly at t={time} but the history window needs t >= {needed}")]
    InsufficientWarmup { time: usize, needed: usize },

    #[error("empty sensor set")]
    EmptySensorSet,

    #[error("invalid distribution row {row}: {detail}")]
    InvalidDistribution { row: usize, detail: String },

    #[error("cannot standardize: need at least 2 trajectories, got {0}")]
    CannotStandardize(usize),

    #[error("non-finite loss in {0}")]
    NonFiniteLoss(String),

    #[error("no feasible links")]
    NoFeasibleLinks,

    #[error("unknown baseline {0:?}")]
    UnknownBaseline(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
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
