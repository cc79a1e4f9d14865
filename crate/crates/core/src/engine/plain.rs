//! Engine with concurrency control switched off: bare neighbor IDs, no
//! versions, no per-vertex locks.
//!
//! A single latch keeps the structure memory-safe when threads do share it;
//! readers take it shared once per operation and writers apply their
//! buffered operations under it at commit. Readers get no snapshot: a scan
//! sees whatever was committed when it took the latch.

use std::sync::atomic::{AtomicU64, Ordering};

use parking_lot::RwLock;

use super::{check_pct, missing_up_to, Engine, MemoryStats, Pin, TxnWriter};
use crate::neighbor::NeighborConfig;
use crate::sets::{NeighborSet, SetMemory};
use crate::types::{EdgeOp, Timestamp, VertexId, VertexIndexKind};
use crate::vertex_index::{AvlIndex, DenseArray, OpenHashIndex, VertexIndex};
use crate::{Error, Result};

enum Index<S: Clone> {
    Dense(DenseArray<S>),
    Hash(OpenHashIndex<S>),
    Tree(AvlIndex<S>),
}

macro_rules! each_index {
    ($ix:expr, $i:ident => $body:expr) => {
        match $ix {
            Index::Dense($i) => $body,
            Index::Hash($i) => $body,
            Index::Tree($i) => $body,
        }
    };
}

struct State<S: Clone> {
    index: Index<S>,
    bound: u64,
}

impl<S: NeighborSet + Clone> State<S> {
    fn get(&self, u: VertexId) -> Option<&S> {
        each_index!(&self.index, i => i.search(u))
    }

    fn get_mut(&mut self, u: VertexId) -> Option<&mut S> {
        each_index!(&mut self.index, i => i.search_mut(u))
    }

    fn create(&mut self, u: VertexId, cfg: &NeighborConfig) -> bool {
        let made = each_index!(&mut self.index, i => i.insert(u, S::new(cfg)));
        if made {
            self.bound = self.bound.max(u + 1);
        }
        made
    }

    fn len(&self) -> usize {
        each_index!(&self.index, i => i.len())
    }

    fn ids(&self) -> Vec<VertexId> {
        let mut v = Vec::with_capacity(self.len());
        each_index!(&self.index, i => i.scan(|u, _| v.push(u)));
        if matches!(self.index, Index::Hash(_)) {
            v.sort_unstable();
        }
        v
    }

    fn sets(&self, mut f: impl FnMut(&S)) {
        each_index!(&self.index, i => i.scan(|_, s| f(s)));
    }
}

pub struct PlainEngine<S: Clone> {
    state: RwLock<State<S>>,
    ts: AtomicU64,
    cfg: NeighborConfig,
    auto_create: bool,
}

impl<S: NeighborSet + Clone> PlainEngine<S> {
    pub fn new(cfg: NeighborConfig, index: VertexIndexKind, auto_create: bool) -> Self {
        let index = match index {
            VertexIndexKind::Dense => Index::Dense(DenseArray::new()),
            VertexIndexKind::Hash => Index::Hash(OpenHashIndex::default()),
            VertexIndexKind::Tree => Index::Tree(AvlIndex::new()),
        };
        PlainEngine {
            state: RwLock::new(State { index, bound: 0 }),
            ts: AtomicU64::new(0),
            cfg,
            auto_create,
        }
    }

    fn ensure(&self, st: &mut State<S>, ids: &[VertexId]) -> Result<()> {
        if self.auto_create {
            for u in missing_up_to(st.bound, ids) {
                st.create(u, &self.cfg);
            }
            for &u in ids {
                st.create(u, &self.cfg);
            }
            return Ok(());
        }
        match ids.iter().find(|&&u| st.get(u).is_none()) {
            Some(&u) => Err(Error::VertexNotFound(u)),
            None => Ok(()),
        }
    }
}

struct PlainWriter<'g, S: Clone> {
    eng: &'g PlainEngine<S>,
    delta_v: Vec<VertexId>,
    ops: Vec<EdgeOp>,
}

impl<S: NeighborSet + Clone> TxnWriter for PlainWriter<'_, S> {
    fn insert(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        self.delta_v.extend([u, v]);
        self.ops.push(EdgeOp::Insert(u, v));
        Ok(())
    }

    fn delete(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        self.delta_v.extend([u, v]);
        self.ops.push(EdgeOp::Delete(u, v));
        Ok(())
    }

    fn contains(&self, u: VertexId, v: VertexId) -> bool {
        for op in self.ops.iter().rev() {
            if op.source() == u && op.target() == v {
                return op.is_insert();
            }
        }
        let st = self.eng.state.read();
        st.get(u).is_some_and(|s| s.latest_contains(v))
    }

    fn commit(self: Box<Self>) -> Timestamp {
        let eng = self.eng;
        let mut st = eng.state.write();
        // Vertices were validated at begin; anything else named later is
        // created here (auto-create) or skipped.
        let _ = eng.ensure(&mut st, &self.delta_v);
        for op in &self.ops {
            if let Some(s) = st.get_mut(op.source()) {
                match *op {
                    EdgeOp::Insert(_, v) => s.insert(v, 0),
                    EdgeOp::Delete(_, v) => s.delete(v, 0),
                };
            }
        }
        Timestamp(eng.ts.fetch_add(1, Ordering::AcqRel) + 1)
    }

    fn abort(self: Box<Self>) {}
}

impl<S: NeighborSet + Clone> Engine for PlainEngine<S> {
    fn now(&self) -> Timestamp {
        Timestamp(self.ts.load(Ordering::Acquire))
    }

    fn pin(&self) -> (Pin, Timestamp) {
        (Pin::Unpinned, self.now())
    }

    fn vertex_bound(&self, _pin: &Pin) -> u64 {
        self.state.read().bound
    }

    fn vertex_count(&self, _pin: &Pin) -> usize {
        self.state.read().len()
    }

    fn has_vertex(&self, _pin: &Pin, u: VertexId) -> bool {
        self.state.read().get(u).is_some()
    }

    fn for_each_vertex(&self, _pin: &Pin, f: &mut dyn FnMut(VertexId)) {
        let ids = self.state.read().ids();
        for u in ids {
            f(u);
        }
    }

    fn contains(&self, _pin: &Pin, t: Timestamp, u: VertexId, v: VertexId) -> bool {
        let st = self.state.read();
        st.get(u).is_some_and(|s| s.contains(v, t, &mut ()))
    }

    fn scan(&self, _pin: &Pin, t: Timestamp, u: VertexId, f: &mut dyn FnMut(VertexId)) -> usize {
        let st = self.state.read();
        st.get(u).map_or(0, |s| s.scan(t, f))
    }

    fn insert_vertex(&self, u: VertexId) -> bool {
        self.state.write().create(u, &self.cfg)
    }

    fn begin_write(&self, delta_v: &[VertexId]) -> Result<Box<dyn TxnWriter + '_>> {
        if !self.auto_create {
            let st = self.state.read();
            if let Some(&u) = delta_v.iter().find(|&&u| st.get(u).is_none()) {
                return Err(Error::VertexNotFound(u));
            }
        }
        Ok(Box::new(PlainWriter {
            eng: self,
            delta_v: delta_v.to_vec(),
            ops: Vec::new(),
        }))
    }

    fn load(&self, adj: &[(VertexId, Vec<VertexId>)]) -> Result<()> {
        if self.now() != Timestamp::ZERO {
            return Err(Error::InvalidArgument("bulk load into a written graph".into()));
        }
        let mut st = self.state.write();
        let ids: Vec<VertexId> = adj
            .iter()
            .flat_map(|(u, ns)| std::iter::once(*u).chain(ns.iter().copied()))
            .collect();
        self.ensure(&mut st, &ids)?;
        for (u, ns) in adj {
            let s = st.get_mut(*u).ok_or(Error::VertexNotFound(*u))?;
            if s.degree() != 0 {
                return Err(Error::InvalidArgument(format!("vertex {u} loaded twice")));
            }
            *s = S::bulk_load(&self.cfg, ns);
        }
        Ok(())
    }

    fn compact(&self) -> usize {
        0
    }

    fn inject_versions(&self, pct: f64, _versions_per_key: usize, _seed: u64) -> Result<usize> {
        check_pct(pct)?;
        Ok(0)
    }

    fn multi_version_keys(&self) -> usize {
        0
    }

    fn memory(&self) -> MemoryStats {
        let st = self.state.read();
        let mut m = SetMemory::default();
        let mut edges = 0;
        st.sets(|s| {
            m += s.memory();
            edges += s.degree() as u64;
        });
        MemoryStats {
            edges,
            vertices: st.len() as u64,
            entry_words: S::ENTRY_WORDS,
            payload_bytes: m.payload_bytes,
            version_bytes: m.version_bytes,
            container_overhead_bytes: m.overhead_bytes,
            vertex_index_bytes: each_index!(&st.index, i => i.memory_bytes()),
        }
    }

    fn check(&self) -> Result<(), String> {
        let st = self.state.read();
        for u in st.ids() {
            if let Some(s) = st.get(u) {
                s.check().map_err(|e| format!("vertex {u}: {e}"))?;
            }
        }
        Ok(())
    }
}
