//! Unsorted dynamic array with a bloom filter; appends at the tail and scans
//! newest first.

use std::mem::size_of;

use super::{payload_bytes, ContainerMemory, Entry, NeighborConfig, NeighborIndex};
use crate::bloom::BloomFilter;
use crate::probe::Probe;

#[derive(Clone, Debug)]
pub struct UnsortedArray<E> {
    items: Vec<E>,
    bloom: BloomFilter,
    bloom_ratio: usize,
}

impl<E: Entry> UnsortedArray<E> {
    fn rebuild_bloom(&mut self) {
        let bytes = self.items.capacity() * size_of::<E>();
        self.bloom = BloomFilter::for_block(bytes, self.bloom_ratio);
        for e in &self.items {
            self.bloom.insert(e.key());
        }
    }

    /// Index of the newest entry with `key`.
    pub fn position(&self, key: u64) -> Option<usize> {
        if !self.bloom.may_contain(key) {
            return None;
        }
        self.items.iter().rposition(|e| e.key() == key)
    }

    /// Append without the uniqueness precondition: interval versions keep
    /// several entries per key.
    pub fn push(&mut self, e: E) {
        if self.items.len() == self.items.capacity() {
            let cap = (self.items.capacity() * 2).max(4);
            self.items.reserve_exact(cap - self.items.len());
            self.items.push(e);
            self.rebuild_bloom();
        } else {
            self.items.push(e);
            self.bloom.insert(e.key());
        }
    }

    pub fn may_contain(&self, key: u64) -> bool {
        self.bloom.may_contain(key)
    }

    pub fn as_slice(&self) -> &[E] {
        &self.items
    }

    pub fn as_mut_slice(&mut self) -> &mut [E] {
        &mut self.items
    }

    pub fn truncate(&mut self, len: usize) {
        self.items.truncate(len);
    }

    /// Keep entries matching `keep`, preserving order; rebuilds the filter.
    pub fn retain(&mut self, keep: impl FnMut(&E) -> bool) {
        self.items.retain(keep);
        self.rebuild_bloom();
    }

    pub fn bloom_bytes(&self) -> usize {
        self.bloom.byte_len()
    }
}

impl<E: Entry> NeighborIndex<E> for UnsortedArray<E> {
    const SORTED: bool = false;

    fn new(cfg: &NeighborConfig) -> Self {
        UnsortedArray {
            items: Vec::new(),
            bloom: BloomFilter::with_bytes(0),
            bloom_ratio: cfg.bloom_ratio,
        }
    }

    fn bulk_load(cfg: &NeighborConfig, sorted: Vec<E>) -> Self {
        let mut s = UnsortedArray {
            items: sorted,
            bloom: BloomFilter::with_bytes(0),
            bloom_ratio: cfg.bloom_ratio,
        };
        s.rebuild_bloom();
        s
    }

    #[inline]
    fn len(&self) -> usize {
        self.items.len()
    }

    fn find<P: Probe>(&self, key: u64, probe: &mut P) -> Option<E> {
        if !self.bloom.may_contain(key) {
            return None;
        }
        for e in self.items.iter().rev() {
            probe.compare();
            if e.key() == key {
                return Some(*e);
            }
        }
        None
    }

    fn get_mut(&mut self, key: u64) -> Option<&mut E> {
        if !self.bloom.may_contain(key) {
            return None;
        }
        self.items.iter_mut().rev().find(|e| e.key() == key)
    }

    fn insert(&mut self, e: E) {
        debug_assert!(self.get(e.key()).is_none());
        self.push(e);
    }

    fn remove(&mut self, key: u64) -> Option<E> {
        let i = self.position(key)?;
        Some(self.items.remove(i))
    }

    fn for_each<F: FnMut(&E)>(&self, mut f: F) {
        for e in self.items.iter().rev() {
            f(e);
        }
    }

    fn for_each_mut<F: FnMut(&mut E)>(&mut self, mut f: F) {
        for e in self.items.iter_mut().rev() {
            f(e);
        }
    }

    fn memory(&self) -> ContainerMemory {
        ContainerMemory {
            payload_bytes: payload_bytes::<E>(self.items.len()),
            overhead_bytes: (self.items.capacity() - self.items.len()) * size_of::<E>()
                + self.bloom.byte_len(),
        }
    }

    fn check(&self) -> Result<(), String> {
        for e in &self.items {
            if !self.bloom.may_contain(e.key()) {
                return Err(format!("bloom false negative for {}", e.key()));
            }
        }
        Ok(())
    }
}
