//! Storage engines behind [`crate::graph::Graph`]: one per concurrency
//! regime, generic over the neighbor set.

use std::sync::Arc;

use serde::Serialize;

use crate::types::{EdgeOp, Timestamp, VertexId};

pub mod coarse;
pub mod fine;
pub mod plain;

pub use coarse::Snapshot;

/// What a reader holds for the lifetime of a read transaction.
pub(crate) enum Pin {
    /// Registry slot in fine mode.
    Slot(usize),
    /// Off mode: nothing to pin.
    Unpinned,
    /// Coarse mode: a guard on the published snapshot. The fast path
    /// borrows a per-thread debt slot instead of touching the refcount.
    Snapshot(arc_swap::Guard<Arc<Snapshot>>),
}

/// Structural byte accounting for a quiesced graph.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MemoryStats {
    /// Neighbors present in the latest state.
    pub edges: u64,
    pub vertices: u64,
    /// Machine words per stored neighbor entry.
    pub entry_words: usize,
    /// `edges * entry_words * 8`.
    pub payload_bytes: usize,
    /// Superseded and deleted versions still stored.
    pub version_bytes: usize,
    /// Container slack, block headers, filters, set headers.
    pub container_overhead_bytes: usize,
    /// Vertex index and per-vertex lock/slot cells.
    pub vertex_index_bytes: usize,
}

impl MemoryStats {
    pub fn total_bytes(&self) -> usize {
        self.payload_bytes
            + self.version_bytes
            + self.container_overhead_bytes
            + self.vertex_index_bytes
    }

    /// Payload words per visible edge.
    pub fn words_per_edge(&self) -> f64 {
        if self.edges == 0 {
            return 0.0;
        }
        self.payload_bytes as f64 / (self.edges as f64 * 8.0)
    }
}

/// Mutation side of one write transaction.
pub(crate) trait TxnWriter {
    fn insert(&mut self, u: VertexId, v: VertexId) -> crate::Result<()>;
    fn delete(&mut self, u: VertexId, v: VertexId) -> crate::Result<()>;
    /// Presence including this transaction's own writes.
    fn contains(&self, u: VertexId, v: VertexId) -> bool;
    fn commit(self: Box<Self>) -> Timestamp;
    fn abort(self: Box<Self>);
}

pub(crate) trait Engine: Send + Sync {
    /// Latest published `t(G)`.
    fn now(&self) -> Timestamp;
    fn pin(&self) -> (Pin, Timestamp);
    fn unpin(&self, _pin: &Pin) {}

    /// One past the largest vertex ID visible through `pin`.
    fn vertex_bound(&self, pin: &Pin) -> u64;
    fn vertex_count(&self, pin: &Pin) -> usize;
    fn has_vertex(&self, pin: &Pin, u: VertexId) -> bool;
    /// Ascending vertex IDs.
    fn for_each_vertex(&self, pin: &Pin, f: &mut dyn FnMut(VertexId));

    fn contains(&self, pin: &Pin, t: Timestamp, u: VertexId, v: VertexId) -> bool;
    fn scan(&self, pin: &Pin, t: Timestamp, u: VertexId, f: &mut dyn FnMut(VertexId)) -> usize;

    /// Non-transactional. Returns false if `u` already existed.
    fn insert_vertex(&self, u: VertexId) -> bool;

    /// Start a writer over `delta_v` (sorted, deduplicated, all present).
    fn begin_write(&self, delta_v: &[VertexId]) -> crate::Result<Box<dyn TxnWriter + '_>>;

    /// Apply `ops` in order as one transaction.
    fn apply_batch(&self, ops: &[EdgeOp]) -> crate::Result<Timestamp> {
        let mut dv: Vec<VertexId> = ops.iter().flat_map(|o| [o.source(), o.target()]).collect();
        dv.sort_unstable();
        dv.dedup();
        let mut w = self.begin_write(&dv)?;
        for op in ops {
            let r = match *op {
                EdgeOp::Insert(u, v) => w.insert(u, v),
                EdgeOp::Delete(u, v) => w.delete(u, v),
            };
            if let Err(e) = r {
                w.abort();
                return Err(e);
            }
        }
        Ok(w.commit())
    }

    /// Bulk load adjacency lists (ascending, distinct) into an empty graph,
    /// visible from `t = 0`.
    fn load(&self, adj: &[(VertexId, Vec<VertexId>)]) -> crate::Result<()>;

    /// Reclaim versions below the reader watermark.
    fn compact(&self) -> usize;

    /// Quiesced only. See [`crate::sets::NeighborSet::inject_versions`].
    fn inject_versions(&self, pct: f64, versions_per_key: usize, seed: u64)
        -> crate::Result<usize>;

    fn multi_version_keys(&self) -> usize;

    fn memory(&self) -> MemoryStats;

    fn check(&self) -> Result<(), String>;

    fn latest_snapshot(&self) -> Option<Arc<Snapshot>> {
        None
    }
}

/// Vertex IDs to materialize so that every ID in `ids` exists.
pub(crate) fn missing_up_to(bound: u64, ids: &[VertexId]) -> std::ops::Range<u64> {
    let max = ids.iter().copied().max().map_or(0, |m| m + 1);
    bound..max.max(bound)
}

pub(crate) fn check_pct(pct: f64) -> crate::Result<()> {
    if (0.0..=100.0).contains(&pct) {
        Ok(())
    } else {
        Err(crate::Error::InvalidArgument(format!(
            "version fraction {pct} outside [0, 100]"
        )))
    }
}
