//! Coarse-grained engine: one writer at a time builds a new snapshot by
//! path copying; readers pin an immutable snapshot for their whole query.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use arc_swap::ArcSwap;
use parking_lot::Mutex;
use rayon::prelude::*;

use super::{check_pct, missing_up_to, Engine, MemoryStats, Pin, TxnWriter};
use crate::neighbor::{CowSet, NeighborConfig, PlainEntry};
use crate::pavl;
use crate::sets::{NeighborSet, PlainSet, SetMemory};
use crate::types::{EdgeOp, Timestamp, VertexId};
use crate::{Error, Result};

pub type CoarseSet = PlainSet<CowSet<PlainEntry>>;

/// One published version of the whole graph.
pub struct Snapshot {
    ts: Timestamp,
    vertices: pavl::Map<CoarseSet>,
    bound: u64,
    flat: OnceLock<Box<[Option<CoarseSet>]>>,
}

impl Snapshot {
    fn new(ts: Timestamp, vertices: pavl::Map<CoarseSet>, bound: u64) -> Self {
        Snapshot {
            ts,
            vertices,
            bound,
            flat: OnceLock::new(),
        }
    }

    pub fn ts(&self) -> Timestamp {
        self.ts
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    #[inline]
    pub fn get(&self, u: VertexId) -> Option<&CoarseSet> {
        match self.flat.get() {
            Some(f) => f.get(u as usize)?.as_ref(),
            None => self.vertices.get(u),
        }
    }

    /// Tree lookup, ignoring any flattened array.
    pub fn get_from_tree(&self, u: VertexId) -> Option<&CoarseSet> {
        self.vertices.get(u)
    }

    /// Dense array of set handles indexed by vertex ID, built on first call.
    /// Later lookups through [`Snapshot::get`] skip the tree descent.
    pub fn flatten(&self) -> &[Option<CoarseSet>] {
        self.flat.get_or_init(|| {
            let mut v = vec![None; self.bound as usize];
            for (u, s) in self.vertices.iter() {
                v[u as usize] = Some(s.clone());
            }
            v.into_boxed_slice()
        })
    }

    pub fn is_flattened(&self) -> bool {
        self.flat.get().is_some()
    }

    pub fn vertices(&self) -> &pavl::Map<CoarseSet> {
        &self.vertices
    }
}

pub struct CoarseEngine {
    current: ArcSwap<Snapshot>,
    token: Mutex<()>,
    pool: rayon::ThreadPool,
    cfg: NeighborConfig,
    auto_create: bool,
}

impl CoarseEngine {
    pub fn new(cfg: NeighborConfig, batch_threads: usize, auto_create: bool) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(batch_threads.max(1))
            .thread_name(|i| format!("dgs-batch-{i}"))
            .build()
            .map_err(|e| Error::Config(format!("batch pool: {e}")))?;
        Ok(CoarseEngine {
            current: ArcSwap::from_pointee(Snapshot::new(Timestamp::ZERO, pavl::Map::new(), 0)),
            token: Mutex::new(()),
            pool,
            cfg,
            auto_create,
        })
    }

    /// The latest snapshot.
    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.current.load_full()
    }

    fn empty_set(&self) -> CoarseSet {
        CoarseSet::new(&self.cfg)
    }

    fn ensure(
        &self,
        map: &mut pavl::Map<CoarseSet>,
        bound: &mut u64,
        ids: &[VertexId],
    ) -> Result<()> {
        if !self.auto_create {
            return match ids.iter().find(|&&u| !map.contains_key(u)) {
                Some(&u) => Err(Error::VertexNotFound(u)),
                None => Ok(()),
            };
        }
        let range = missing_up_to(*bound, ids);
        if map.is_empty() && !range.is_empty() {
            let pairs = range.clone().map(|u| (u, self.empty_set())).collect();
            *map = pavl::Map::from_sorted(pairs);
        } else {
            for u in range.clone() {
                map.get_or_insert_with(u, || self.empty_set());
            }
        }
        *bound = (*bound).max(range.end);
        Ok(())
    }
}

struct CoarseWriter<'g> {
    eng: &'g CoarseEngine,
    _token: parking_lot::MutexGuard<'g, ()>,
    base: Arc<Snapshot>,
    map: pavl::Map<CoarseSet>,
    bound: u64,
}

impl CoarseWriter<'_> {
    fn set_mut(&mut self, u: VertexId, v: VertexId) -> Result<&mut CoarseSet> {
        self.eng.ensure(&mut self.map, &mut self.bound, &[u, v])?;
        Ok(self.map.get_mut(u).expect("ensured"))
    }
}

impl TxnWriter for CoarseWriter<'_> {
    fn insert(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        self.set_mut(u, v)?.insert(v, 0);
        Ok(())
    }

    fn delete(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        self.set_mut(u, v)?.delete(v, 0);
        Ok(())
    }

    fn contains(&self, u: VertexId, v: VertexId) -> bool {
        self.map.get(u).is_some_and(|s| s.latest_contains(v))
    }

    fn commit(self: Box<Self>) -> Timestamp {
        let ts = self.base.ts.next();
        self.eng
            .current
            .store(Arc::new(Snapshot::new(ts, self.map, self.bound)));
        ts
    }

    fn abort(self: Box<Self>) {}
}

impl Engine for CoarseEngine {
    fn now(&self) -> Timestamp {
        self.current.load().ts
    }

    fn pin(&self) -> (Pin, Timestamp) {
        let s = self.current.load();
        let ts = s.ts;
        (Pin::Snapshot(s), ts)
    }

    fn vertex_bound(&self, pin: &Pin) -> u64 {
        snap(pin).bound
    }

    fn vertex_count(&self, pin: &Pin) -> usize {
        snap(pin).vertices.len()
    }

    fn has_vertex(&self, pin: &Pin, u: VertexId) -> bool {
        snap(pin).get(u).is_some()
    }

    fn for_each_vertex(&self, pin: &Pin, f: &mut dyn FnMut(VertexId)) {
        for u in snap(pin).vertices.keys() {
            f(u);
        }
    }

    fn contains(&self, pin: &Pin, t: Timestamp, u: VertexId, v: VertexId) -> bool {
        snap(pin).get(u).is_some_and(|s| s.contains(v, t, &mut ()))
    }

    fn scan(&self, pin: &Pin, t: Timestamp, u: VertexId, f: &mut dyn FnMut(VertexId)) -> usize {
        snap(pin).get(u).map_or(0, |s| s.scan(t, f))
    }

    fn insert_vertex(&self, u: VertexId) -> bool {
        let _t = self.token.lock();
        let cur = self.current.load_full();
        if cur.vertices.contains_key(u) {
            return false;
        }
        // Vertex creation carries no timestamp: republish at the same ts.
        let mut map = cur.vertices.clone();
        map.insert(u, self.empty_set());
        let bound = cur.bound.max(u + 1);
        self.current.store(Arc::new(Snapshot::new(cur.ts, map, bound)));
        true
    }

    fn begin_write(&self, delta_v: &[VertexId]) -> Result<Box<dyn TxnWriter + '_>> {
        let token = self.token.lock();
        let base = self.current.load_full();
        let mut map = base.vertices.clone();
        let mut bound = base.bound;
        self.ensure(&mut map, &mut bound, delta_v)?;
        Ok(Box::new(CoarseWriter {
            eng: self,
            _token: token,
            base,
            map,
            bound,
        }))
    }

    /// One snapshot for the whole batch. Per-source sub-batches are applied
    /// to private copies of their sets in parallel, then merged into the
    /// new root by the writer.
    fn apply_batch(&self, ops: &[EdgeOp]) -> Result<Timestamp> {
        let _token = self.token.lock();
        let base = self.current.load_full();
        let mut map = base.vertices.clone();
        let mut bound = base.bound;
        let ids: Vec<VertexId> = ops.iter().flat_map(|o| [o.source(), o.target()]).collect();
        self.ensure(&mut map, &mut bound, &ids)?;

        let mut groups: BTreeMap<VertexId, Vec<EdgeOp>> = BTreeMap::new();
        for op in ops {
            groups.entry(op.source()).or_default().push(*op);
        }
        let groups: Vec<(VertexId, Vec<EdgeOp>)> = groups.into_iter().collect();
        let shared = &map;
        let updated: Vec<(VertexId, CoarseSet)> = self.pool.install(|| {
            groups
                .into_par_iter()
                .map(|(u, ops)| {
                    let mut s = shared.get(u).cloned().unwrap_or_else(|| self.empty_set());
                    for op in ops {
                        match op {
                            EdgeOp::Insert(_, v) => s.insert(v, 0),
                            EdgeOp::Delete(_, v) => s.delete(v, 0),
                        };
                    }
                    (u, s)
                })
                .collect()
        });
        for (u, s) in updated {
            map.insert(u, s);
        }
        let ts = base.ts.next();
        self.current.store(Arc::new(Snapshot::new(ts, map, bound)));
        Ok(ts)
    }

    fn load(&self, adj: &[(VertexId, Vec<VertexId>)]) -> Result<()> {
        let _token = self.token.lock();
        let base = self.current.load_full();
        if base.ts != Timestamp::ZERO || !base.vertices.is_empty() {
            return Err(Error::InvalidArgument("bulk load into a written graph".into()));
        }
        let mut sets: BTreeMap<VertexId, CoarseSet> = BTreeMap::new();
        let mut bound = 0;
        for (u, ns) in adj {
            if sets.insert(*u, CoarseSet::bulk_load(&self.cfg, ns)).is_some() {
                return Err(Error::InvalidArgument(format!("vertex {u} loaded twice")));
            }
            bound = bound.max(u + 1);
            if let Some(&m) = ns.last() {
                bound = bound.max(m + 1);
            }
        }
        if self.auto_create {
            for u in 0..bound {
                sets.entry(u).or_insert_with(|| self.empty_set());
            }
        } else if let Some(v) = adj
            .iter()
            .flat_map(|(_, ns)| ns.iter())
            .find(|v| !sets.contains_key(v))
        {
            return Err(Error::VertexNotFound(*v));
        }
        let map = pavl::Map::from_sorted(sets.into_iter().collect());
        self.current
            .store(Arc::new(Snapshot::new(Timestamp::ZERO, map, bound)));
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
        let s = self.current.load_full();
        let mut m = SetMemory::default();
        let mut edges = 0;
        for set in s.vertices.values() {
            m += set.memory();
            edges += set.degree() as u64;
        }
        MemoryStats {
            edges,
            vertices: s.vertices.len() as u64,
            entry_words: CoarseSet::ENTRY_WORDS,
            payload_bytes: m.payload_bytes,
            version_bytes: 0,
            container_overhead_bytes: m.overhead_bytes,
            vertex_index_bytes: pavl::node_bytes::<CoarseSet>() * s.vertices.len(),
        }
    }

    fn check(&self) -> Result<(), String> {
        let s = self.current.load_full();
        s.vertices.check()?;
        for (u, set) in s.vertices.iter() {
            set.check().map_err(|e| format!("vertex {u}: {e}"))?;
        }
        Ok(())
    }

    fn latest_snapshot(&self) -> Option<Arc<Snapshot>> {
        Some(self.snapshot())
    }
}

fn snap(pin: &Pin) -> &Snapshot {
    match pin {
        Pin::Snapshot(s) => s,
        _ => unreachable!("coarse reader without a snapshot"),
    }
}
