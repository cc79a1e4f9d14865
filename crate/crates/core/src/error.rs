use crate::types::VertexId;

/// Errors surfaced by the graph store, the workload tools and the harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("transaction aborted: {0}")]
    Aborted(String),

    #[error("vertex {0} not found")]
    VertexNotFound(VertexId),

    #[error("{0} is not supported by this container")]
    Unsupported(&'static str),

    #[error("corrupt block encoding: {0}")]
    Corrupt(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("workload mismatch: {0}")]
    WorkloadMismatch(String),

    #[error("no samples")]
    EmptySamples,

    #[error("worker failed: {0}")]
    WorkerFailed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
