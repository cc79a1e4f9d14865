//! The uniform graph API: configuration, read and write transactions.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::engine::coarse::CoarseEngine;
use crate::engine::fine::FineEngine;
use crate::engine::plain::PlainEngine;
use crate::engine::{Engine, MemoryStats, Pin, Snapshot, TxnWriter};
use crate::neighbor::{
    Adaptive, CowSet, NeighborConfig, PlainEntry, Pma, SortedArray, UnsortedArray, VersionedEntry,
};
use crate::sets::{ChainSet, IntervalSet, PlainSet};
use crate::types::{CcMode, ContainerKind, EdgeOp, Timestamp, VertexId, VertexIndexKind};
use crate::{Error, Result};

/// Every knob that selects or tunes a graph store.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphConfig {
    pub container: ContainerKind,
    pub cc: CcMode,
    /// Ignored in coarse mode, which always indexes vertices with a
    /// persistent tree.
    pub vertex_index: VertexIndexKind,
    pub block_size: usize,
    pub adaptive_threshold: usize,
    pub bloom_ratio: usize,
    pub compress: bool,
    /// Create every missing vertex up to the largest ID a write names.
    pub auto_create: bool,
    /// Worker threads for coarse-mode batch application.
    pub batch_threads: usize,
    /// Concurrent readers tracked for the compaction watermark.
    pub reader_slots: usize,
}

impl Default for GraphConfig {
    fn default() -> Self {
        let n = NeighborConfig::default();
        GraphConfig {
            container: ContainerKind::Sorted,
            cc: CcMode::Fine,
            vertex_index: VertexIndexKind::Dense,
            block_size: n.block_size,
            adaptive_threshold: n.adaptive_threshold,
            bloom_ratio: n.bloom_ratio,
            compress: n.compress,
            auto_create: true,
            batch_threads: 8,
            reader_slots: 256,
        }
    }
}

impl GraphConfig {
    pub fn new(container: ContainerKind, cc: CcMode) -> Self {
        GraphConfig {
            container,
            cc,
            ..Default::default()
        }
    }

    pub fn neighbor_config(&self) -> NeighborConfig {
        NeighborConfig {
            block_size: self.block_size,
            adaptive_threshold: self.adaptive_threshold,
            bloom_ratio: self.bloom_ratio,
            compress: self.compress,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cc == CcMode::Coarse && self.container != ContainerKind::Cow {
            return Err(Error::Config(format!(
                "coarse mode requires the cow container, not {}",
                self.container
            )));
        }
        if self.block_size < 4 || self.block_size % 2 != 0 {
            return Err(Error::Config(format!(
                "block size must be even and at least 4, got {}",
                self.block_size
            )));
        }
        if self.batch_threads == 0 {
            return Err(Error::Config("batch threads must be positive".into()));
        }
        if self.reader_slots == 0 {
            return Err(Error::Config("reader slots must be positive".into()));
        }
        Ok(())
    }
}

/// A dynamic graph store for one container and concurrency regime.
pub struct Graph {
    cfg: GraphConfig,
    engine: Box<dyn Engine>,
}

impl Graph {
    pub fn new(cfg: GraphConfig) -> Result<Graph> {
        cfg.validate()?;
        let n = cfg.neighbor_config();
        let (ix, slots, auto) = (cfg.vertex_index, cfg.reader_slots, cfg.auto_create);
        macro_rules! fine {
            ($s:ty) => {
                Box::new(FineEngine::<$s>::new(n, ix, slots, auto)) as Box<dyn Engine>
            };
        }
        macro_rules! off {
            ($s:ty) => {
                Box::new(PlainEngine::<PlainSet<$s>>::new(n, ix, auto)) as Box<dyn Engine>
            };
        }
        let engine = match (cfg.cc, cfg.container) {
            (CcMode::Fine, ContainerKind::Unsorted) => fine!(IntervalSet),
            (CcMode::Fine, ContainerKind::Sorted) => {
                fine!(ChainSet<SortedArray<VersionedEntry>>)
            }
            (CcMode::Fine, ContainerKind::Pma) => fine!(ChainSet<Pma<VersionedEntry>>),
            (CcMode::Fine, ContainerKind::Segsl) => fine!(ChainSet<Adaptive<VersionedEntry>>),
            (CcMode::Fine, ContainerKind::Cow) => fine!(ChainSet<CowSet<VersionedEntry>>),
            (CcMode::Off, ContainerKind::Unsorted) => off!(UnsortedArray<PlainEntry>),
            (CcMode::Off, ContainerKind::Sorted) => off!(SortedArray<PlainEntry>),
            (CcMode::Off, ContainerKind::Pma) => off!(Pma<PlainEntry>),
            (CcMode::Off, ContainerKind::Segsl) => off!(Adaptive<PlainEntry>),
            (CcMode::Off, ContainerKind::Cow) => off!(CowSet<PlainEntry>),
            (CcMode::Coarse, _) => Box::new(CoarseEngine::new(n, cfg.batch_threads, auto)?),
        };
        Ok(Graph { cfg, engine })
    }

    pub fn config(&self) -> &GraphConfig {
        &self.cfg
    }

    /// Whether neighbor scans come out in ascending ID order.
    pub fn is_sorted(&self) -> bool {
        self.cfg.container.is_sorted()
    }

    /// Latest published `t(G)`.
    pub fn now(&self) -> Timestamp {
        self.engine.now()
    }

    pub fn begin_read(&self) -> ReadTxn<'_> {
        let (pin, start_ts) = self.engine.pin();
        ReadTxn {
            graph: self,
            pin,
            start_ts,
        }
    }

    /// Start a write transaction over the vertices it will touch. In fine
    /// mode every operation must name only vertices in `delta_v`; their
    /// exclusive locks are taken here in ascending ID order.
    pub fn begin_write(&self, delta_v: impl IntoIterator<Item = VertexId>) -> Result<WriteTxn<'_>> {
        let delta_v = crate::concurrency::lock_order(delta_v);
        let inner = self.engine.begin_write(&delta_v)?;
        Ok(WriteTxn {
            delta_v,
            ops: Vec::new(),
            state: TxnState::Active,
            commit_ts: None,
            inner: Some(inner),
        })
    }

    /// Single-edge transaction.
    pub fn insert_edge(&self, u: VertexId, v: VertexId) -> Result<Timestamp> {
        let mut t = self.begin_write([u, v])?;
        t.insert_edge(u, v)?;
        t.commit()
    }

    pub fn delete_edge(&self, u: VertexId, v: VertexId) -> Result<Timestamp> {
        let mut t = self.begin_write([u, v])?;
        t.delete_edge(u, v)?;
        t.commit()
    }

    /// Create a vertex outside any transaction. Returns false if present.
    pub fn insert_vertex(&self, u: VertexId) -> bool {
        self.engine.insert_vertex(u)
    }

    /// Apply `ops` in order as one transaction with one timestamp.
    pub fn apply_batch(&self, ops: &[EdgeOp]) -> Result<Timestamp> {
        if ops.is_empty() {
            return Err(Error::InvalidArgument("empty batch".into()));
        }
        self.engine.apply_batch(ops)
    }

    /// Bulk load an initial edge set into an empty graph. Duplicates are
    /// dropped; the edges are visible from `t = 0`.
    pub fn load_edges(&self, edges: &[(VertexId, VertexId)]) -> Result<()> {
        let mut sorted = edges.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut adj: Vec<(VertexId, Vec<VertexId>)> = Vec::new();
        for (u, v) in sorted {
            match adj.last_mut() {
                Some((w, ns)) if *w == u => ns.push(v),
                _ => adj.push((u, vec![v])),
            }
        }
        self.engine.load(&adj)
    }

    /// Reclaim versions no active reader can observe.
    pub fn compact(&self) -> usize {
        self.engine.compact()
    }

    /// Quiesced only: give `pct`% of each vertex's neighbors
    /// `versions_per_key` versions. Returns how many neighbors were chosen;
    /// always 0 for version-free regimes.
    pub fn inject_versions(&self, pct: f64, versions_per_key: usize, seed: u64) -> Result<usize> {
        self.engine.inject_versions(pct, versions_per_key, seed)
    }

    pub fn multi_version_keys(&self) -> usize {
        self.engine.multi_version_keys()
    }

    /// Structural accounting of the latest state.
    pub fn memory(&self) -> MemoryStats {
        self.engine.memory()
    }

    pub fn check(&self) -> Result<(), String> {
        self.engine.check()
    }

    /// Latest coarse-mode snapshot.
    pub fn snapshot(&self) -> Option<Arc<Snapshot>> {
        self.engine.latest_snapshot()
    }
}

impl std::fmt::Debug for Graph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Graph")
            .field("cfg", &self.cfg)
            .field("now", &self.now())
            .finish()
    }
}

/// A read query pinned at `start_ts`.
pub struct ReadTxn<'g> {
    graph: &'g Graph,
    pin: Pin,
    start_ts: Timestamp,
}

impl<'g> ReadTxn<'g> {
    pub fn start_ts(&self) -> Timestamp {
        self.start_ts
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn search_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.graph.engine.contains(&self.pin, self.start_ts, u, v)
    }

    /// Visit the neighbors of `u` visible at `start_ts`.
    pub fn scan_neighbors(&self, u: VertexId, mut f: impl FnMut(VertexId)) -> usize {
        self.graph.engine.scan(&self.pin, self.start_ts, u, &mut f)
    }

    pub fn neighbors(&self, u: VertexId) -> Vec<VertexId> {
        let mut v = Vec::new();
        self.scan_neighbors(u, |x| v.push(x));
        v
    }

    pub fn degree(&self, u: VertexId) -> usize {
        self.scan_neighbors(u, |_| {})
    }

    pub fn has_vertex(&self, u: VertexId) -> bool {
        self.graph.engine.has_vertex(&self.pin, u)
    }

    /// One past the largest vertex ID.
    pub fn vertex_bound(&self) -> u64 {
        self.graph.engine.vertex_bound(&self.pin)
    }

    pub fn vertex_count(&self) -> usize {
        self.graph.engine.vertex_count(&self.pin)
    }

    /// Visit vertex IDs in ascending order.
    pub fn for_each_vertex(&self, mut f: impl FnMut(VertexId)) {
        self.graph.engine.for_each_vertex(&self.pin, &mut f)
    }

    pub fn vertices(&self) -> Vec<VertexId> {
        let mut v = Vec::new();
        self.for_each_vertex(|u| v.push(u));
        v
    }

    /// The pinned snapshot in coarse mode.
    pub fn snapshot(&self) -> Option<&Arc<Snapshot>> {
        match &self.pin {
            Pin::Snapshot(s) => Some(&**s),
            _ => None,
        }
    }

    /// Build the flattened vertex array of the pinned snapshot (coarse mode)
    /// so later lookups skip the tree. Returns false in other modes.
    pub fn flatten(&self) -> bool {
        match &self.pin {
            Pin::Snapshot(s) => {
                s.flatten();
                true
            }
            _ => false,
        }
    }
}

impl Drop for ReadTxn<'_> {
    fn drop(&mut self) {
        self.graph.engine.unpin(&self.pin);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TxnState {
    Active,
    Committed,
    Aborted,
}

/// A write transaction. Dropping an active transaction aborts it.
pub struct WriteTxn<'g> {
    delta_v: Vec<VertexId>,
    ops: Vec<EdgeOp>,
    state: TxnState,
    commit_ts: Option<Timestamp>,
    inner: Option<Box<dyn TxnWriter + 'g>>,
}

impl WriteTxn<'_> {
    pub fn state(&self) -> TxnState {
        self.state
    }

    pub fn commit_ts(&self) -> Option<Timestamp> {
        self.commit_ts
    }

    /// Vertices touched, ascending.
    pub fn delta_v(&self) -> &[VertexId] {
        &self.delta_v
    }

    pub fn ops(&self) -> &[EdgeOp] {
        &self.ops
    }

    pub fn insert_edge(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        self.apply(EdgeOp::Insert(u, v))
    }

    /// Deleting an absent edge is a no-op that still commits.
    pub fn delete_edge(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        self.apply(EdgeOp::Delete(u, v))
    }

    /// Presence including this transaction's own writes.
    pub fn contains_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.inner.as_ref().is_some_and(|w| w.contains(u, v))
    }

    fn apply(&mut self, op: EdgeOp) -> Result<()> {
        let Some(w) = self.inner.as_mut() else {
            return Err(Error::Aborted(format!("transaction is {:?}", self.state)));
        };
        let (u, v) = (op.source(), op.target());
        let r = match op {
            EdgeOp::Insert(..) => w.insert(u, v),
            EdgeOp::Delete(..) => w.delete(u, v),
        };
        match r {
            Ok(()) => {
                for x in [u, v] {
                    if let Err(i) = self.delta_v.binary_search(&x) {
                        self.delta_v.insert(i, x);
                    }
                }
                self.ops.push(op);
                Ok(())
            }
            Err(e) => {
                self.rollback();
                Err(e)
            }
        }
    }

    pub fn commit(mut self) -> Result<Timestamp> {
        let w = self
            .inner
            .take()
            .ok_or_else(|| Error::Aborted(format!("transaction is {:?}", self.state)))?;
        let ts = w.commit();
        self.state = TxnState::Committed;
        self.commit_ts = Some(ts);
        Ok(ts)
    }

    pub fn abort(mut self) {
        self.rollback();
    }

    fn rollback(&mut self) {
        if let Some(w) = self.inner.take() {
            w.abort();
            self.state = TxnState::Aborted;
        }
    }
}

impl Drop for WriteTxn<'_> {
    fn drop(&mut self) {
        self.rollback();
    }
}

impl std::fmt::Debug for WriteTxn<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WriteTxn")
            .field("delta_v", &self.delta_v)
            .field("ops", &self.ops)
            .field("state", &self.state)
            .field("commit_ts", &self.commit_ts)
            .finish()
    }
}
