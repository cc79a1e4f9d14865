//! Concurrent vertex table for the fine-grained engine.
//!
//! Entries live in an append-only arena of geometrically growing chunks, so
//! a looked-up `&T` stays valid for the table's lifetime and lookups by slot
//! take no lock. The dense design uses the vertex ID as the slot; the hash
//! and tree designs map IDs to slots under a reader-writer latch.

use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::OnceLock;

use parking_lot::RwLock;

use crate::probe::Probe;
use crate::types::{VertexId, VertexIndexKind};
use crate::vertex_index::{AvlIndex, OpenHashIndex, VertexIndex};

const BASE_SHIFT: u32 = 6;
const CHUNKS: usize = 48;

/// Append-only slot arena: chunk `i` holds `64 << i` slots.
pub struct ChunkedSlots<T> {
    chunks: [OnceLock<Box<[OnceLock<T>]>>; CHUNKS],
}

impl<T> Default for ChunkedSlots<T> {
    fn default() -> Self {
        ChunkedSlots {
            chunks: std::array::from_fn(|_| OnceLock::new()),
        }
    }
}

#[inline]
fn locate(slot: usize) -> (usize, usize) {
    let s = (slot >> BASE_SHIFT) + 1;
    let chunk = (usize::BITS - 1 - s.leading_zeros()) as usize;
    let start = ((1usize << chunk) - 1) << BASE_SHIFT;
    (chunk, slot - start)
}

impl<T> ChunkedSlots<T> {
    #[inline]
    pub fn get(&self, slot: usize) -> Option<&T> {
        let (c, off) = locate(slot);
        self.chunks.get(c)?.get()?[off].get()
    }

    pub fn get_or_init(&self, slot: usize, make: impl FnOnce() -> T) -> &T {
        let (c, off) = locate(slot);
        let chunk = self.chunks[c].get_or_init(|| {
            (0..(1usize << (c as u32 + BASE_SHIFT)))
                .map(|_| OnceLock::new())
                .collect()
        });
        chunk[off].get_or_init(make)
    }

    /// Slots allocated across materialized chunks.
    pub fn allocated(&self) -> usize {
        self.chunks
            .iter()
            .filter_map(|c| c.get())
            .map(|c| c.len())
            .sum()
    }
}

enum SlotMap {
    Dense,
    Hash(RwLock<OpenHashIndex<usize>>),
    Tree(RwLock<AvlIndex<usize>>),
}

pub struct VertexTable<T> {
    slots: ChunkedSlots<T>,
    map: SlotMap,
    next_slot: AtomicUsize,
    count: AtomicUsize,
    bound: AtomicU64,
}

impl<T> VertexTable<T> {
    pub fn new(kind: VertexIndexKind) -> Self {
        VertexTable {
            slots: ChunkedSlots::default(),
            map: match kind {
                VertexIndexKind::Dense => SlotMap::Dense,
                VertexIndexKind::Hash => SlotMap::Hash(RwLock::new(OpenHashIndex::default())),
                VertexIndexKind::Tree => SlotMap::Tree(RwLock::new(AvlIndex::new())),
            },
            next_slot: AtomicUsize::new(0),
            count: AtomicUsize::new(0),
            bound: AtomicU64::new(0),
        }
    }

    #[inline]
    pub fn get(&self, u: VertexId) -> Option<&T> {
        self.get_probed(u, &mut ())
    }

    pub fn get_probed<P: Probe>(&self, u: VertexId, probe: &mut P) -> Option<&T> {
        let slot = match &self.map {
            SlotMap::Dense => {
                probe.visit();
                u as usize
            }
            SlotMap::Hash(m) => *m.read().search_probed(u, probe)?,
            SlotMap::Tree(m) => *m.read().search_probed(u, probe)?,
        };
        self.slots.get(slot)
    }

    /// Create `u` if absent; returns the entry and whether it was created.
    pub fn insert(&self, u: VertexId, make: impl FnOnce() -> T) -> (&T, bool) {
        let slot = match &self.map {
            SlotMap::Dense => u as usize,
            SlotMap::Hash(m) => {
                if let Some(&s) = m.read().search(u) {
                    return (self.slots.get(s).expect("mapped"), false);
                }
                let mut w = m.write();
                if let Some(&s) = w.search(u) {
                    return (self.slots.get(s).expect("mapped"), false);
                }
                let s = self.next_slot.fetch_add(1, Ordering::Relaxed);
                self.slots.get_or_init(s, make);
                w.insert(u, s);
                return self.created(u, s);
            }
            SlotMap::Tree(m) => {
                if let Some(&s) = m.read().search(u) {
                    return (self.slots.get(s).expect("mapped"), false);
                }
                let mut w = m.write();
                if let Some(&s) = w.search(u) {
                    return (self.slots.get(s).expect("mapped"), false);
                }
                let s = self.next_slot.fetch_add(1, Ordering::Relaxed);
                self.slots.get_or_init(s, make);
                w.insert(u, s);
                return self.created(u, s);
            }
        };
        let mut made = false;
        let e = self.slots.get_or_init(slot, || {
            made = true;
            make()
        });
        if made {
            self.count.fetch_add(1, Ordering::Relaxed);
            self.bound.fetch_max(u + 1, Ordering::AcqRel);
        }
        (e, made)
    }

    fn created(&self, u: VertexId, s: usize) -> (&T, bool) {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.bound.fetch_max(u + 1, Ordering::AcqRel);
        (self.slots.get(s).expect("initialized"), true)
    }

    pub fn len(&self) -> usize {
        self.count.load(Ordering::Acquire)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// One past the largest vertex ID ever inserted.
    pub fn bound(&self) -> u64 {
        self.bound.load(Ordering::Acquire)
    }

    /// Present vertex IDs in ascending order.
    pub fn ids(&self) -> Vec<VertexId> {
        match &self.map {
            SlotMap::Dense => (0..self.bound())
                .filter(|&u| self.slots.get(u as usize).is_some())
                .collect(),
            SlotMap::Hash(m) => {
                let mut v = Vec::with_capacity(self.len());
                m.read().scan(|u, _| v.push(u));
                v.sort_unstable();
                v
            }
            SlotMap::Tree(m) => {
                let mut v = Vec::with_capacity(self.len());
                m.read().scan(|u, _| v.push(u));
                v
            }
        }
    }

    /// Bytes of index structure (slot arena plus ID map).
    pub fn memory_bytes(&self) -> usize {
        let arena = self.slots.allocated() * std::mem::size_of::<OnceLock<T>>();
        arena
            + match &self.map {
                SlotMap::Dense => 0,
                SlotMap::Hash(m) => m.read().memory_bytes(),
                SlotMap::Tree(m) => m.read().memory_bytes(),
            }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn locate_covers_chunks() {
        assert_eq!(locate(0), (0, 0));
        assert_eq!(locate(63), (0, 63));
        assert_eq!(locate(64), (1, 0));
        assert_eq!(locate(191), (1, 127));
        assert_eq!(locate(192), (2, 0));
    }

    #[test]
    fn all_kinds() {
        for kind in [VertexIndexKind::Dense, VertexIndexKind::Hash, VertexIndexKind::Tree] {
            let t = VertexTable::new(kind);
            for u in [5u64, 1000, 3, 70_000] {
                assert!(t.insert(u, || u * 2).1);
                assert!(!t.insert(u, || 0).1);
            }
            assert_eq!(t.get(1000), Some(&2000));
            assert_eq!(t.get(4), None);
            assert_eq!(t.ids(), vec![3, 5, 1000, 70_000]);
            assert_eq!(t.bound(), 70_001);
        }
    }

    #[test]
    fn concurrent_inserts() {
        let t = VertexTable::new(VertexIndexKind::Hash);
        std::thread::scope(|s| {
            for w in 0..4u64 {
                let t = &t;
                s.spawn(move || {
                    for u in 0..2000u64 {
                        t.insert(u, || u + w * 0);
                    }
                });
            }
        });
        assert_eq!(t.len(), 2000);
        assert!((0..2000).all(|u| t.get(u) == Some(&u)));
    }
}
