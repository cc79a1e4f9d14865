//! Fine-grained engine: per-vertex reader-writer locks, G2PL writers and
//! versioned neighbor sets.

use parking_lot::RwLock;

use super::{check_pct, missing_up_to, Engine, MemoryStats, Pin, TxnWriter};
use crate::concurrency::{LockSet, ReadGuard};
use crate::neighbor::NeighborConfig;
use crate::sets::{NeighborSet, SetMemory};
use crate::slots::VertexTable;
use crate::types::{Timestamp, VertexId, VertexIndexKind};
use crate::version::{Clock, ReaderRegistry, TxnIds};
use crate::{Error, Result};

pub struct FineEngine<S> {
    table: VertexTable<RwLock<S>>,
    clock: Clock,
    readers: ReaderRegistry,
    txn_ids: TxnIds,
    cfg: NeighborConfig,
    auto_create: bool,
}

impl<S: NeighborSet> FineEngine<S> {
    pub fn new(
        cfg: NeighborConfig,
        index: VertexIndexKind,
        reader_slots: usize,
        auto_create: bool,
    ) -> Self {
        FineEngine {
            table: VertexTable::new(index),
            clock: Clock::new(),
            readers: ReaderRegistry::new(reader_slots),
            txn_ids: TxnIds::default(),
            cfg,
            auto_create,
        }
    }

    fn create(&self, u: VertexId) -> bool {
        self.table.insert(u, || RwLock::new(S::new(&self.cfg))).1
    }

    fn ensure(&self, ids: &[VertexId]) -> Result<()> {
        if self.auto_create {
            for u in missing_up_to(self.table.bound(), ids) {
                self.create(u);
            }
            for &u in ids {
                self.create(u);
            }
            return Ok(());
        }
        match ids.iter().find(|&&u| self.table.get(u).is_none()) {
            Some(&u) => Err(Error::VertexNotFound(u)),
            None => Ok(()),
        }
    }

    fn each_set(&self, mut f: impl FnMut(&RwLock<S>)) {
        for u in self.table.ids() {
            if let Some(l) = self.table.get(u) {
                f(l);
            }
        }
    }
}

struct FineWriter<'g, S> {
    eng: &'g FineEngine<S>,
    locks: LockSet<'g, S>,
    touched: Vec<bool>,
    txn: u64,
}

impl<S: NeighborSet> FineWriter<'_, S> {
    fn slot(&self, u: VertexId, v: VertexId) -> Result<usize> {
        if self.locks.position(v).is_none() {
            return Err(Error::Aborted(format!("vertex {v} outside the write set")));
        }
        self.locks
            .position(u)
            .ok_or_else(|| Error::Aborted(format!("vertex {u} outside the write set")))
    }
}

impl<S: NeighborSet> TxnWriter for FineWriter<'_, S> {
    fn insert(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        let i = self.slot(u, v)?;
        self.locks.get_mut(i).insert(v, self.txn);
        self.touched[i] = true;
        Ok(())
    }

    fn delete(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        let i = self.slot(u, v)?;
        self.locks.get_mut(i).delete(v, self.txn);
        self.touched[i] = true;
        Ok(())
    }

    fn contains(&self, u: VertexId, v: VertexId) -> bool {
        match self.locks.position(u) {
            Some(i) => self.locks.get(i).latest_contains(v),
            None => false,
        }
    }

    fn commit(self: Box<Self>) -> Timestamp {
        let FineWriter {
            eng,
            mut locks,
            touched,
            ..
        } = *self;
        // Allocate while every lock is still held; publish after release so
        // readers blocked on these vertices can proceed while earlier
        // timestamps finish.
        let ts = eng.clock.allocate();
        for (set, t) in locks.iter_mut().zip(&touched) {
            if *t {
                set.stamp(ts);
            }
        }
        drop(locks);
        eng.clock.publish(ts);
        ts
    }

    fn abort(self: Box<Self>) {
        let FineWriter {
            mut locks, touched, ..
        } = *self;
        for (set, t) in locks.iter_mut().zip(&touched) {
            if *t {
                set.rollback();
            }
        }
    }
}

impl<S: NeighborSet> Engine for FineEngine<S> {
    fn now(&self) -> Timestamp {
        self.clock.now()
    }

    fn pin(&self) -> (Pin, Timestamp) {
        loop {
            if let (Some(slot), ts) = self.readers.register(&self.clock) {
                return (Pin::Slot(slot), ts);
            }
            std::thread::yield_now();
        }
    }

    fn unpin(&self, pin: &Pin) {
        if let Pin::Slot(s) = pin {
            self.readers.unregister(*s);
        }
    }

    fn vertex_bound(&self, _pin: &Pin) -> u64 {
        self.table.bound()
    }

    fn vertex_count(&self, _pin: &Pin) -> usize {
        self.table.len()
    }

    fn has_vertex(&self, _pin: &Pin, u: VertexId) -> bool {
        self.table.get(u).is_some()
    }

    fn for_each_vertex(&self, _pin: &Pin, f: &mut dyn FnMut(VertexId)) {
        for u in self.table.ids() {
            f(u);
        }
    }

    fn contains(&self, _pin: &Pin, t: Timestamp, u: VertexId, v: VertexId) -> bool {
        match self.table.get(u) {
            Some(l) => ReadGuard::acquire(l).contains(v, t, &mut ()),
            None => false,
        }
    }

    fn scan(&self, _pin: &Pin, t: Timestamp, u: VertexId, f: &mut dyn FnMut(VertexId)) -> usize {
        match self.table.get(u) {
            Some(l) => ReadGuard::acquire(l).scan(t, f),
            None => 0,
        }
    }

    fn insert_vertex(&self, u: VertexId) -> bool {
        self.create(u)
    }

    fn begin_write(&self, delta_v: &[VertexId]) -> Result<Box<dyn TxnWriter + '_>> {
        self.ensure(delta_v)?;
        let locks = LockSet::acquire(delta_v.iter().copied(), |u| self.table.get(u))
            .ok_or_else(|| Error::Aborted("vertex vanished during lock acquisition".into()))?;
        let n = locks.ids().len();
        Ok(Box::new(FineWriter {
            eng: self,
            locks,
            touched: vec![false; n],
            txn: self.txn_ids.next(),
        }))
    }

    fn load(&self, adj: &[(VertexId, Vec<VertexId>)]) -> Result<()> {
        if self.clock.now() != Timestamp::ZERO {
            return Err(Error::InvalidArgument("bulk load into a written graph".into()));
        }
        let ids: Vec<VertexId> = adj
            .iter()
            .flat_map(|(u, ns)| std::iter::once(*u).chain(ns.iter().copied()))
            .collect();
        self.ensure(&ids)?;
        for (u, ns) in adj {
            let l = self.table.get(*u).ok_or(Error::VertexNotFound(*u))?;
            let mut set = l.write();
            if set.degree() != 0 {
                return Err(Error::InvalidArgument(format!("vertex {u} loaded twice")));
            }
            *set = S::bulk_load(&self.cfg, ns);
        }
        Ok(())
    }

    fn compact(&self) -> usize {
        let wm = self.readers.watermark(&self.clock);
        let mut n = 0;
        self.each_set(|l| n += l.write().compact(wm));
        n
    }

    fn inject_versions(&self, pct: f64, versions_per_key: usize, seed: u64) -> Result<usize> {
        check_pct(pct)?;
        let rounds = versions_per_key.saturating_sub(1);
        let mut stamps = Vec::with_capacity(rounds);
        for _ in 0..rounds {
            stamps.push(self.clock.allocate());
        }
        let first = stamps.first().copied().unwrap_or(self.clock.now().next());
        let mut total = 0;
        let mut i = 0u64;
        let mut err = None;
        self.each_set(|l| {
            if err.is_some() {
                return;
            }
            match l.write().inject_versions(pct, versions_per_key, seed ^ i, first) {
                Ok(n) => total += n,
                Err(e) => err = Some(e),
            }
            i += 1;
        });
        for ts in stamps {
            self.clock.publish(ts);
        }
        match err {
            Some(e) => Err(e),
            None => Ok(total),
        }
    }

    fn multi_version_keys(&self) -> usize {
        let mut n = 0;
        self.each_set(|l| n += l.read().multi_version_keys());
        n
    }

    fn memory(&self) -> MemoryStats {
        let mut m = SetMemory::default();
        let mut edges = 0;
        self.each_set(|l| {
            let s = l.read();
            m += s.memory();
            edges += s.degree() as u64;
        });
        MemoryStats {
            edges,
            vertices: self.table.len() as u64,
            entry_words: S::ENTRY_WORDS,
            payload_bytes: m.payload_bytes,
            version_bytes: m.version_bytes,
            container_overhead_bytes: m.overhead_bytes,
            vertex_index_bytes: self.table.memory_bytes(),
        }
    }

    fn check(&self) -> Result<(), String> {
        let mut res = Ok(());
        for u in self.table.ids() {
            if let Some(l) = self.table.get(u) {
                if let Err(e) = l.read().check() {
                    res = Err(format!("vertex {u}: {e}"));
                    break;
                }
            }
        }
        res
    }
}
