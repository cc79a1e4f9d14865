//! Dynamic graph storage workbench.

pub mod analytics;
pub mod bloom;
pub mod concurrency;
pub mod csr;
pub mod engine;
pub mod error;
pub mod graph;
pub mod harness;
pub mod neighbor;
pub mod pavl;
pub mod probe;
pub mod rng;
pub mod sets;
pub mod slots;
pub mod types;
pub mod version;
pub mod vertex_index;
pub mod view;
pub mod workload;

pub use engine::{MemoryStats, Snapshot};
pub use error::{Error, Result};
pub use graph::{Graph, GraphConfig, ReadTxn, TxnState, WriteTxn};
pub use types::{CcMode, ContainerKind, EdgeOp, Timestamp, VertexId, VertexIndexKind};
