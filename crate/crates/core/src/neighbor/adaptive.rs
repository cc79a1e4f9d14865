//! Sorted array for small sets, segmented skip list once the physical size
//! passes a threshold.

use super::{ContainerMemory, Entry, NeighborConfig, NeighborIndex, SegmentedSkipList, SortedArray};
use crate::probe::Probe;

#[derive(Clone, Debug)]
pub enum Adaptive<E> {
    Small(SortedArray<E>, usize, usize),
    Large(SegmentedSkipList<E>),
}

impl<E: Entry> Adaptive<E> {
    pub fn is_segmented(&self) -> bool {
        matches!(self, Adaptive::Large(_))
    }

    fn promote(&mut self) {
        if let Adaptive::Small(arr, threshold, block) = self {
            if arr.len() > *threshold {
                let cfg = NeighborConfig {
                    block_size: *block,
                    ..NeighborConfig::default()
                };
                let items = std::mem::take(arr).into_vec();
                *self = Adaptive::Large(SegmentedSkipList::bulk_load(&cfg, items));
            }
        }
    }
}

macro_rules! both {
    ($s:expr, $x:ident => $e:expr) => {
        match $s {
            Adaptive::Small($x, ..) => $e,
            Adaptive::Large($x) => $e,
        }
    };
}

impl<E: Entry> NeighborIndex<E> for Adaptive<E> {
    const SORTED: bool = true;

    fn new(cfg: &NeighborConfig) -> Self {
        if cfg.adaptive_threshold == 0 {
            Adaptive::Large(SegmentedSkipList::new(cfg))
        } else {
            Adaptive::Small(SortedArray::new(cfg), cfg.adaptive_threshold, cfg.block_size)
        }
    }

    fn bulk_load(cfg: &NeighborConfig, sorted: Vec<E>) -> Self {
        if cfg.adaptive_threshold == 0 || sorted.len() > cfg.adaptive_threshold {
            Adaptive::Large(SegmentedSkipList::bulk_load(cfg, sorted))
        } else {
            Adaptive::Small(
                SortedArray::bulk_load(cfg, sorted),
                cfg.adaptive_threshold,
                cfg.block_size,
            )
        }
    }

    fn len(&self) -> usize {
        both!(self, s => s.len())
    }

    fn find<P: Probe>(&self, key: u64, probe: &mut P) -> Option<E> {
        both!(self, s => s.find(key, probe))
    }

    fn get_mut(&mut self, key: u64) -> Option<&mut E> {
        both!(self, s => s.get_mut(key))
    }

    fn insert(&mut self, e: E) {
        both!(self, s => s.insert(e));
        self.promote();
    }

    fn remove(&mut self, key: u64) -> Option<E> {
        both!(self, s => s.remove(key))
    }

    fn for_each<F: FnMut(&E)>(&self, f: F) {
        both!(self, s => s.for_each(f))
    }

    fn for_each_mut<F: FnMut(&mut E)>(&mut self, f: F) {
        both!(self, s => s.for_each_mut(f))
    }

    fn memory(&self) -> ContainerMemory {
        both!(self, s => s.memory())
    }

    fn check(&self) -> Result<(), String> {
        both!(self, s => s.check())
    }
}
