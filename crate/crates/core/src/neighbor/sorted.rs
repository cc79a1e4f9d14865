//! Sorted dynamic array.

use std::cmp::Ordering;
use std::mem::size_of;

use super::{payload_bytes, ContainerMemory, Entry, NeighborConfig, NeighborIndex};
use crate::probe::Probe;

#[derive(Clone, Debug)]
pub struct SortedArray<E> {
    items: Vec<E>,
}

impl<E> Default for SortedArray<E> {
    fn default() -> Self {
        SortedArray { items: Vec::new() }
    }
}

impl<E: Entry> SortedArray<E> {
    /// Three-way binary search; at most `floor(log2 n) + 1` comparisons.
    pub fn search<P: Probe>(&self, key: u64, probe: &mut P) -> Result<usize, usize> {
        let (mut lo, mut hi) = (0, self.items.len());
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            probe.compare();
            match self.items[mid].key().cmp(&key) {
                Ordering::Less => lo = mid + 1,
                Ordering::Greater => hi = mid,
                Ordering::Equal => return Ok(mid),
            }
        }
        Err(lo)
    }

    pub fn as_slice(&self) -> &[E] {
        &self.items
    }

    pub fn into_vec(self) -> Vec<E> {
        self.items
    }
}

impl<E: Entry> NeighborIndex<E> for SortedArray<E> {
    const SORTED: bool = true;

    fn new(_cfg: &NeighborConfig) -> Self {
        SortedArray { items: Vec::new() }
    }

    fn bulk_load(_cfg: &NeighborConfig, sorted: Vec<E>) -> Self {
        SortedArray { items: sorted }
    }

    #[inline]
    fn len(&self) -> usize {
        self.items.len()
    }

    fn find<P: Probe>(&self, key: u64, probe: &mut P) -> Option<E> {
        self.search(key, probe).ok().map(|i| self.items[i])
    }

    fn get_mut(&mut self, key: u64) -> Option<&mut E> {
        let i = self.search(key, &mut ()).ok()?;
        Some(&mut self.items[i])
    }

    fn insert(&mut self, e: E) {
        match self.search(e.key(), &mut ()) {
            Ok(_) => debug_assert!(false, "duplicate key {}", e.key()),
            Err(i) => self.items.insert(i, e),
        }
    }

    fn remove(&mut self, key: u64) -> Option<E> {
        let i = self.search(key, &mut ()).ok()?;
        Some(self.items.remove(i))
    }

    fn for_each<F: FnMut(&E)>(&self, f: F) {
        self.items.iter().for_each(f);
    }

    fn for_each_mut<F: FnMut(&mut E)>(&mut self, f: F) {
        self.items.iter_mut().for_each(f);
    }

    fn memory(&self) -> ContainerMemory {
        ContainerMemory {
            payload_bytes: payload_bytes::<E>(self.items.len()),
            overhead_bytes: (self.items.capacity() - self.items.len()) * size_of::<E>(),
        }
    }

    fn check(&self) -> Result<(), String> {
        match self.items.windows(2).position(|w| w[0].key() >= w[1].key()) {
            Some(i) => Err(format!("unsorted at {i}")),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neighbor::testing::run_model;
    use crate::neighbor::PlainEntry;
    use crate::probe::OpCounts;

    #[test]
    fn model() {
        run_model::<SortedArray<PlainEntry>>(&NeighborConfig::default(), 5000, 300, 2);
    }

    #[test]
    fn comparison_bound() {
        for n in [1usize, 2, 3, 7, 8, 1000, 1024] {
            let s = SortedArray::bulk_load(
                &NeighborConfig::default(),
                (0..n as u64).map(|k| PlainEntry(2 * k)).collect(),
            );
            let bound = (n as f64).log2().ceil() as u64 + 1;
            for k in 0..(2 * n as u64 + 1) {
                let mut c = OpCounts::default();
                s.find(k, &mut c);
                assert!(c.comparisons <= bound, "n={n} k={k} {}", c.comparisons);
            }
        }
    }
}
