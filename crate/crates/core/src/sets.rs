//! Neighbor sets under each concurrency regime.
//!
//! * [`PlainSet`]: bare IDs, no versions (off and coarse modes).
//! * [`ChainSet`]: one entry per neighbor with a version word; neighbors with
//!   more than one live version keep the whole chain out of line, newest
//!   first, so readers follow a pointer per multi-version neighbor.
//! * [`IntervalSet`]: unsorted array of `[begin, end)` entries scanned in
//!   reverse with a bloom filter.
//!
//! Writers call `insert`/`delete` while holding exclusive access, then
//! `stamp` at commit or `rollback` at abort.

use std::mem::size_of;

use crate::neighbor::{
    Entry, IntervalEntry, NeighborConfig, NeighborIndex, PlainEntry, UnsortedArray,
    VersionedEntry, NIL, WORD_BYTES,
};
use crate::probe::Probe;
use crate::rng::SplitMix64;
use crate::types::{Timestamp, VertexId};
use crate::version::{chain_visible, interval_visible, VersionOp, VersionWord, INF};

/// Byte accounting for one neighbor set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SetMemory {
    /// Latest-visible neighbors times the entry width.
    pub payload_bytes: usize,
    /// Superseded or deleted versions still stored.
    pub version_bytes: usize,
    /// Container slack and index structure.
    pub overhead_bytes: usize,
}

impl std::ops::AddAssign for SetMemory {
    fn add_assign(&mut self, o: Self) {
        self.payload_bytes += o.payload_bytes;
        self.version_bytes += o.version_bytes;
        self.overhead_bytes += o.overhead_bytes;
    }
}

pub trait NeighborSet: Send + Sync + 'static {
    /// Whether scans yield ascending neighbor IDs.
    const SORTED: bool;
    /// Machine words per stored element.
    const ENTRY_WORDS: usize;

    fn new(cfg: &NeighborConfig) -> Self;

    /// Initial neighbors, visible from `t = 0`. Keys strictly ascending.
    fn bulk_load(cfg: &NeighborConfig, sorted: &[VertexId]) -> Self;

    fn contains<P: Probe>(&self, key: VertexId, t: Timestamp, probe: &mut P) -> bool;

    /// Visit neighbors visible at `t`; returns how many were visited.
    fn scan<F: FnMut(VertexId)>(&self, t: Timestamp, f: F) -> usize;

    /// Presence including this writer's uncommitted changes.
    fn latest_contains(&self, key: VertexId) -> bool;

    /// Returns true if the neighbor was absent before.
    fn insert(&mut self, key: VertexId, txn: u64) -> bool;

    /// Returns true if the neighbor was present before.
    fn delete(&mut self, key: VertexId, txn: u64) -> bool;

    fn stamp(&mut self, ts: Timestamp);

    fn rollback(&mut self);

    /// Drop versions no reader at or above `wm` can observe. Returns the
    /// number of physical versions reclaimed.
    fn compact(&mut self, wm: Timestamp) -> usize;

    /// Neighbors present at the latest state.
    fn degree(&self) -> usize;

    /// Neighbors with more than one stored version.
    fn multi_version_keys(&self) -> usize {
        0
    }

    fn memory(&self) -> SetMemory;

    fn check(&self) -> Result<(), String>;

    /// Give `pct`% of the live neighbors `versions_per_key` versions each by
    /// re-inserting them in `versions_per_key - 1` rounds stamped at
    /// `first_ts, first_ts + 1, ...`. Returns the number of neighbors chosen.
    fn inject_versions(
        &mut self,
        pct: f64,
        versions_per_key: usize,
        seed: u64,
        first_ts: Timestamp,
    ) -> crate::Result<usize> {
        if !(0.0..=100.0).contains(&pct) {
            return Err(crate::Error::InvalidArgument(format!(
                "version fraction {pct} outside [0, 100]"
            )));
        }
        let mut keys = Vec::with_capacity(self.degree());
        self.scan(Timestamp(u64::MAX >> 2), |k| keys.push(k));
        let n = (keys.len() as f64 * pct / 100.0).floor() as usize;
        let picked: Vec<VertexId> = SplitMix64::new(seed)
            .sample_indices(keys.len(), n)
            .into_iter()
            .map(|i| keys[i])
            .collect();
        for round in 0..versions_per_key.saturating_sub(1) {
            for &k in &picked {
                self.insert(k, 1);
            }
            self.stamp(Timestamp(first_ts.0 + round as u64));
        }
        Ok(n)
    }
}

// ---------------------------------------------------------------------------

/// Version-free set for the off and coarse regimes.
#[derive(Clone, Debug)]
pub struct PlainSet<S> {
    store: S,
}

impl<S: NeighborIndex<PlainEntry>> PlainSet<S> {
    pub fn store(&self) -> &S {
        &self.store
    }
}

impl<S: NeighborIndex<PlainEntry>> NeighborSet for PlainSet<S> {
    const SORTED: bool = S::SORTED;
    const ENTRY_WORDS: usize = PlainEntry::WORDS;

    fn new(cfg: &NeighborConfig) -> Self {
        PlainSet { store: S::new(cfg) }
    }

    fn bulk_load(cfg: &NeighborConfig, sorted: &[VertexId]) -> Self {
        PlainSet {
            store: S::bulk_load(cfg, sorted.iter().map(|&k| PlainEntry(k)).collect()),
        }
    }

    #[inline]
    fn contains<P: Probe>(&self, key: VertexId, _t: Timestamp, probe: &mut P) -> bool {
        self.store.find(key, probe).is_some()
    }

    #[inline]
    fn scan<F: FnMut(VertexId)>(&self, _t: Timestamp, mut f: F) -> usize {
        let mut n = 0;
        self.store.for_each(|e| {
            f(e.0);
            n += 1;
        });
        n
    }

    fn latest_contains(&self, key: VertexId) -> bool {
        self.store.get(key).is_some()
    }

    fn insert(&mut self, key: VertexId, _txn: u64) -> bool {
        if self.store.get(key).is_some() {
            return false;
        }
        self.store.insert(PlainEntry(key));
        true
    }

    fn delete(&mut self, key: VertexId, _txn: u64) -> bool {
        self.store.remove(key).is_some()
    }

    fn stamp(&mut self, _ts: Timestamp) {}

    fn rollback(&mut self) {}

    fn compact(&mut self, _wm: Timestamp) -> usize {
        0
    }

    fn degree(&self) -> usize {
        self.store.len()
    }

    fn memory(&self) -> SetMemory {
        let m = self.store.memory();
        SetMemory {
            payload_bytes: m.payload_bytes,
            version_bytes: 0,
            overhead_bytes: m.overhead_bytes,
        }
    }

    fn check(&self) -> Result<(), String> {
        self.store.check()
    }

    fn inject_versions(
        &mut self,
        pct: f64,
        _versions_per_key: usize,
        _seed: u64,
        _first_ts: Timestamp,
    ) -> crate::Result<usize> {
        if !(0.0..=100.0).contains(&pct) {
            return Err(crate::Error::InvalidArgument(format!(
                "version fraction {pct} outside [0, 100]"
            )));
        }
        Ok(0)
    }
}

// ---------------------------------------------------------------------------

/// Version node in the out-of-line chain arena. Same three-word shape as the
/// inline entry: key, version word, link to the next older node.
type ChainNode = VersionedEntry;

#[derive(Clone, Debug)]
pub struct ChainSet<S> {
    store: S,
    arena: Vec<ChainNode>,
    free: Vec<u64>,
    pending: Vec<VertexId>,
    txn: Option<u64>,
    live: usize,
    saved_live: usize,
}

impl<S: NeighborIndex<VersionedEntry>> ChainSet<S> {
    pub fn store(&self) -> &S {
        &self.store
    }

    #[inline]
    fn visible(arena: &[ChainNode], e: &VersionedEntry, t: Timestamp) -> bool {
        if e.link == NIL {
            e.word.is_insert() && e.word.visible_at(t)
        } else {
            chain_visible(ChainIter { arena, at: e.link }, t)
        }
    }

    #[inline]
    fn head_word(&self, e: &VersionedEntry) -> VersionWord {
        if e.link == NIL {
            e.word
        } else {
            self.arena[e.link as usize].word
        }
    }

    fn alloc(arena: &mut Vec<ChainNode>, free: &mut Vec<u64>, node: ChainNode) -> u64 {
        match free.pop() {
            Some(i) => {
                arena[i as usize] = node;
                i
            }
            None => {
                arena.push(node);
                (arena.len() - 1) as u64
            }
        }
    }

    fn begin(&mut self, txn: u64) {
        if self.txn != Some(txn) {
            self.txn = Some(txn);
            self.saved_live = self.live;
            self.pending.clear();
        }
    }

    /// Push a newer version onto the entry for `key`.
    fn push_version(&mut self, key: VertexId, word: VersionWord) {
        let (arena, free) = (&mut self.arena, &mut self.free);
        let e = self.store.get_mut(key).expect("present");
        if e.link == NIL {
            let old = Self::alloc(
                arena,
                free,
                ChainNode {
                    key,
                    word: e.word,
                    link: NIL,
                },
            );
            e.link = old;
            e.word = VersionWord::default();
        }
        let new = Self::alloc(
            arena,
            free,
            ChainNode {
                key,
                word,
                link: e.link,
            },
        );
        e.link = new;
    }

    fn set_head(&mut self, key: VertexId, word: VersionWord) {
        let e = self.store.get_mut(key).expect("present");
        if e.link == NIL {
            e.word = word;
        } else {
            self.arena[e.link as usize].word = word;
        }
    }

    fn versions_of(&self, e: &VersionedEntry) -> usize {
        if e.link == NIL {
            1
        } else {
            ChainIter {
                arena: &self.arena,
                at: e.link,
            }
            .count()
        }
    }

    /// Drop the provisional head of `key`; collapse a single remaining node
    /// back inline; remove a fresh entry altogether.
    fn undo(&mut self, key: VertexId) {
        let Some(e) = self.store.get_mut(key) else { return };
        if e.link == NIL {
            if e.word.is_provisional() {
                self.store.remove(key);
            }
            return;
        }
        let head = self.arena[e.link as usize];
        if !head.word.is_provisional() {
            return;
        }
        self.free.push(e.link);
        e.link = head.link;
        let next = self.arena[e.link as usize];
        if next.link == NIL {
            self.free.push(e.link);
            e.word = next.word;
            e.link = NIL;
        }
    }
}

struct ChainIter<'a> {
    arena: &'a [ChainNode],
    at: u64,
}

impl Iterator for ChainIter<'_> {
    type Item = VersionWord;

    #[inline]
    fn next(&mut self) -> Option<VersionWord> {
        if self.at == NIL {
            return None;
        }
        let n = &self.arena[self.at as usize];
        self.at = n.link;
        Some(n.word)
    }
}

impl<S: NeighborIndex<VersionedEntry>> NeighborSet for ChainSet<S> {
    const SORTED: bool = S::SORTED;
    const ENTRY_WORDS: usize = VersionedEntry::WORDS;

    fn new(cfg: &NeighborConfig) -> Self {
        ChainSet {
            store: S::new(cfg),
            arena: Vec::new(),
            free: Vec::new(),
            pending: Vec::new(),
            txn: None,
            live: 0,
            saved_live: 0,
        }
    }

    fn bulk_load(cfg: &NeighborConfig, sorted: &[VertexId]) -> Self {
        let mut s = Self::new(cfg);
        s.store = S::bulk_load(cfg, sorted.iter().map(|&k| VersionedEntry::from_key(k)).collect());
        s.live = sorted.len();
        s
    }

    #[inline]
    fn contains<P: Probe>(&self, key: VertexId, t: Timestamp, probe: &mut P) -> bool {
        self.store
            .find(key, probe)
            .is_some_and(|e| Self::visible(&self.arena, &e, t))
    }

    #[inline]
    fn scan<F: FnMut(VertexId)>(&self, t: Timestamp, mut f: F) -> usize {
        let mut n = 0;
        let arena = &self.arena[..];
        self.store.for_each(|e| {
            if Self::visible(arena, e, t) {
                f(e.key);
                n += 1;
            }
        });
        n
    }

    fn latest_contains(&self, key: VertexId) -> bool {
        self.store
            .get(key)
            .is_some_and(|e| self.head_word(&e).is_insert())
    }

    fn insert(&mut self, key: VertexId, txn: u64) -> bool {
        self.begin(txn);
        let word = VersionWord::provisional(txn, VersionOp::Insert);
        let Some(e) = self.store.get(key) else {
            self.store.insert(VersionedEntry {
                key,
                word,
                link: NIL,
            });
            self.pending.push(key);
            self.live += 1;
            return true;
        };
        let head = self.head_word(&e);
        let was_live = head.is_insert();
        if head.is_provisional() {
            self.set_head(key, word);
        } else {
            self.push_version(key, word);
            self.pending.push(key);
        }
        if !was_live {
            self.live += 1;
        }
        !was_live
    }

    fn delete(&mut self, key: VertexId, txn: u64) -> bool {
        let Some(e) = self.store.get(key) else { return false };
        let head = self.head_word(&e);
        if !head.is_insert() {
            return false;
        }
        self.begin(txn);
        let word = VersionWord::provisional(txn, VersionOp::Delete);
        if head.is_provisional() {
            if e.link == NIL {
                // Inserted by this transaction and never committed.
                self.store.remove(key);
            } else {
                self.set_head(key, word);
            }
        } else {
            self.push_version(key, word);
            self.pending.push(key);
        }
        self.live -= 1;
        true
    }

    fn stamp(&mut self, ts: Timestamp) {
        let pending = std::mem::take(&mut self.pending);
        for &key in &pending {
            let Some(e) = self.store.get_mut(key) else { continue };
            let w = if e.link == NIL {
                &mut e.word
            } else {
                &mut self.arena[e.link as usize].word
            };
            if w.is_provisional() {
                *w = w.stamp(ts);
            }
        }
        self.pending = pending;
        self.pending.clear();
        self.txn = None;
    }

    fn rollback(&mut self) {
        let pending = std::mem::take(&mut self.pending);
        for &key in pending.iter().rev() {
            self.undo(key);
        }
        self.pending = pending;
        self.pending.clear();
        if self.txn.take().is_some() {
            self.live = self.saved_live;
        }
    }

    fn compact(&mut self, wm: Timestamp) -> usize {
        let mut freed = 0;
        let mut dead = Vec::new();
        let (arena, free) = (&mut self.arena, &mut self.free);
        self.store.for_each_mut(|e| {
            if e.link != NIL {
                // Keep nodes down to the newest one visible at `wm`.
                let mut at = e.link;
                let mut keep_last = NIL;
                while at != NIL {
                    let n = arena[at as usize];
                    if n.word.visible_at(wm) {
                        keep_last = at;
                        break;
                    }
                    at = n.link;
                }
                if keep_last != NIL {
                    let mut older = arena[keep_last as usize].link;
                    arena[keep_last as usize].link = NIL;
                    while older != NIL {
                        free.push(older);
                        freed += 1;
                        older = arena[older as usize].link;
                    }
                }
                let head = arena[e.link as usize];
                if head.link == NIL {
                    free.push(e.link);
                    e.word = head.word;
                    e.link = NIL;
                }
            }
            if e.link == NIL && !e.word.is_insert() && e.word.visible_at(wm) {
                dead.push(e.key);
            }
        });
        for k in dead {
            self.store.remove(k);
            freed += 1;
        }
        freed
    }

    fn degree(&self) -> usize {
        self.live
    }

    fn multi_version_keys(&self) -> usize {
        let mut n = 0;
        self.store.for_each(|e| n += (e.link != NIL) as usize);
        n
    }

    fn memory(&self) -> SetMemory {
        let m = self.store.memory();
        let entry = VersionedEntry::WORDS * WORD_BYTES;
        let physical = self.store.len() + self.arena.len() - self.free.len();
        SetMemory {
            payload_bytes: self.live * entry,
            version_bytes: (physical - self.live) * entry,
            overhead_bytes: m.overhead_bytes
                + (self.arena.capacity() - self.arena.len() + self.free.len())
                    * size_of::<ChainNode>(),
        }
    }

    fn check(&self) -> Result<(), String> {
        self.store.check()?;
        let mut live = 0;
        let mut err = None;
        self.store.for_each(|e| {
            live += self.head_word(e).is_insert() as usize;
            if e.link != NIL {
                let words: Vec<VersionWord> = ChainIter {
                    arena: &self.arena,
                    at: e.link,
                }
                .collect();
                if words.len() < 2 {
                    err = Some(format!("key {} has a single-node chain", e.key));
                }
                if words.windows(2).any(|w| w[0].order_key() <= w[1].order_key()) {
                    err = Some(format!("key {} chain not newest-first", e.key));
                }
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        if self.txn.is_none() && live != self.live {
            return Err(format!("live count {} but {live} live heads", self.live));
        }
        Ok(())
    }
}

impl<S: NeighborIndex<VersionedEntry>> ChainSet<S> {
    /// Number of versions stored for `key` (0 if absent).
    pub fn version_count(&self, key: VertexId) -> usize {
        self.store.get(key).map_or(0, |e| self.versions_of(&e))
    }
}

// ---------------------------------------------------------------------------

/// Unsorted interval-versioned set.
#[derive(Clone, Debug)]
pub struct IntervalSet {
    store: UnsortedArray<IntervalEntry>,
    txn: Option<u64>,
    start_len: usize,
    closed: Vec<usize>,
    live: usize,
    saved_live: usize,
}

impl IntervalSet {
    fn marker(txn: u64) -> u64 {
        VersionWord::provisional(txn, VersionOp::Insert).raw()
    }

    fn begin(&mut self, txn: u64) {
        if self.txn != Some(txn) {
            self.txn = Some(txn);
            self.start_len = self.store.len();
            self.closed.clear();
            self.saved_live = self.live;
        }
    }

    fn is_marker(x: u64) -> bool {
        x != INF && VersionWord::from_raw(x).is_provisional()
    }

    pub fn entries(&self) -> &[IntervalEntry] {
        self.store.as_slice()
    }
}

impl NeighborSet for IntervalSet {
    const SORTED: bool = false;
    const ENTRY_WORDS: usize = IntervalEntry::WORDS;

    fn new(cfg: &NeighborConfig) -> Self {
        IntervalSet {
            store: UnsortedArray::new(cfg),
            txn: None,
            start_len: 0,
            closed: Vec::new(),
            live: 0,
            saved_live: 0,
        }
    }

    fn bulk_load(cfg: &NeighborConfig, sorted: &[VertexId]) -> Self {
        IntervalSet {
            store: UnsortedArray::bulk_load(
                cfg,
                sorted.iter().map(|&k| IntervalEntry::from_key(k)).collect(),
            ),
            txn: None,
            start_len: 0,
            closed: Vec::new(),
            live: sorted.len(),
            saved_live: 0,
        }
    }

    fn contains<P: Probe>(&self, key: VertexId, t: Timestamp, probe: &mut P) -> bool {
        if !self.store.may_contain(key) {
            return false;
        }
        for e in self.store.as_slice().iter().rev() {
            probe.compare();
            if e.key == key {
                if interval_visible(e.begin, e.end, t) {
                    return true;
                }
                // Older entries of this key end at or before this begin.
                if e.begin <= t.0 {
                    return false;
                }
            }
        }
        false
    }

    #[inline]
    fn scan<F: FnMut(VertexId)>(&self, t: Timestamp, mut f: F) -> usize {
        let mut n = 0;
        for e in self.store.as_slice().iter().rev() {
            if interval_visible(e.begin, e.end, t) {
                f(e.key);
                n += 1;
            }
        }
        n
    }

    fn latest_contains(&self, key: VertexId) -> bool {
        self.store
            .position(key)
            .is_some_and(|i| self.store.as_slice()[i].end == INF)
    }

    fn insert(&mut self, key: VertexId, txn: u64) -> bool {
        self.begin(txn);
        let m = Self::marker(txn);
        match self.store.position(key) {
            Some(i) => {
                let e = self.store.as_slice()[i];
                if e.end == INF {
                    if e.begin == m {
                        return false;
                    }
                    self.store.as_mut_slice()[i].end = m;
                    self.closed.push(i);
                    self.store.push(IntervalEntry { key, begin: m, end: INF });
                    false
                } else if e.end == m {
                    self.store.as_mut_slice()[i].end = INF;
                    self.live += 1;
                    true
                } else {
                    self.store.push(IntervalEntry { key, begin: m, end: INF });
                    self.live += 1;
                    true
                }
            }
            None => {
                self.store.push(IntervalEntry { key, begin: m, end: INF });
                self.live += 1;
                true
            }
        }
    }

    fn delete(&mut self, key: VertexId, txn: u64) -> bool {
        let Some(i) = self.store.position(key) else { return false };
        if self.store.as_slice()[i].end != INF {
            return false;
        }
        self.begin(txn);
        self.store.as_mut_slice()[i].end = Self::marker(txn);
        if i < self.start_len {
            self.closed.push(i);
        }
        self.live -= 1;
        true
    }

    fn stamp(&mut self, ts: Timestamp) {
        if self.txn.take().is_none() {
            return;
        }
        let start = self.start_len;
        let mut degenerate = false;
        let items = self.store.as_mut_slice();
        for &i in &self.closed {
            if Self::is_marker(items[i].end) {
                items[i].end = ts.0;
                degenerate |= items[i].begin == items[i].end;
            }
        }
        for e in &mut items[start..] {
            if Self::is_marker(e.begin) {
                e.begin = ts.0;
            }
            if Self::is_marker(e.end) {
                e.end = ts.0;
            }
            degenerate |= e.begin == e.end;
        }
        if degenerate {
            self.store.retain(|e| e.begin != e.end);
        }
        self.closed.clear();
    }

    fn rollback(&mut self) {
        if self.txn.take().is_none() {
            return;
        }
        self.store.truncate(self.start_len);
        let items = self.store.as_mut_slice();
        for &i in &self.closed {
            if Self::is_marker(items[i].end) {
                items[i].end = INF;
            }
        }
        self.closed.clear();
        self.live = self.saved_live;
    }

    fn compact(&mut self, wm: Timestamp) -> usize {
        let before = self.store.len();
        self.store
            .retain(|e| e.end == INF || Self::is_marker(e.end) || e.end > wm.0);
        before - self.store.len()
    }

    fn degree(&self) -> usize {
        self.live
    }

    fn multi_version_keys(&self) -> usize {
        let mut keys: Vec<u64> = self.store.as_slice().iter().map(|e| e.key).collect();
        keys.sort_unstable();
        let mut n = 0;
        let mut i = 0;
        while i < keys.len() {
            let j = keys[i..].iter().take_while(|&&k| k == keys[i]).count();
            n += (j > 1) as usize;
            i += j;
        }
        n
    }

    fn memory(&self) -> SetMemory {
        let m = self.store.memory();
        let entry = IntervalEntry::WORDS * WORD_BYTES;
        SetMemory {
            payload_bytes: self.live * entry,
            version_bytes: (self.store.len() - self.live) * entry,
            overhead_bytes: m.overhead_bytes,
        }
    }

    fn check(&self) -> Result<(), String> {
        self.store.check()?;
        let open = self.store.as_slice().iter().filter(|e| e.end == INF).count();
        if self.txn.is_none() && open != self.live {
            return Err(format!("live count {} but {open} open intervals", self.live));
        }
        Ok(())
    }
}
