//! Physical neighbor-index containers.
//!
//! Every container stores entries keyed by the neighbor vertex ID; the
//! concurrency layer in [`crate::sets`] decides what an entry carries
//! (a bare ID, an ID plus a version word, or an ID plus a begin/end pair).

use std::fmt::Debug;
use std::mem::size_of;

use crate::probe::Probe;
use crate::types::Timestamp;
use crate::version::{VersionOp, VersionWord, INF};

pub mod adaptive;
pub mod codec;
pub mod cow;
pub mod pma;
pub mod skiplist;
pub mod sorted;
pub mod unsorted;

pub use adaptive::Adaptive;
pub use cow::CowSet;
pub use pma::Pma;
pub use skiplist::SegmentedSkipList;
pub use sorted::SortedArray;
pub use unsorted::UnsortedArray;

pub const WORD_BYTES: usize = 8;

/// Element layout stored in a container.
pub trait Entry: Copy + Debug + Send + Sync + 'static {
    /// Machine words per element.
    const WORDS: usize;
    /// Whether blocks of this entry may be difference encoded.
    const PACKABLE: bool = false;

    fn key(&self) -> u64;

    /// The entry for a neighbor present since the initial load (`t = 0`).
    fn from_key(key: u64) -> Self;
}

/// Bare neighbor ID: one word.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(transparent)]
pub struct PlainEntry(pub u64);

impl Entry for PlainEntry {
    const WORDS: usize = 1;
    const PACKABLE: bool = true;

    #[inline]
    fn key(&self) -> u64 {
        self.0
    }

    #[inline]
    fn from_key(key: u64) -> Self {
        PlainEntry(key)
    }
}

/// Sentinel for [`VersionedEntry::link`] meaning "no older versions".
pub const NIL: u64 = u64::MAX;

/// Neighbor ID, newest version word and a link to out-of-line older
/// versions: three words.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(C)]
pub struct VersionedEntry {
    pub key: u64,
    pub word: VersionWord,
    pub link: u64,
}

impl Entry for VersionedEntry {
    const WORDS: usize = 3;

    #[inline]
    fn key(&self) -> u64 {
        self.key
    }

    #[inline]
    fn from_key(key: u64) -> Self {
        VersionedEntry {
            key,
            word: VersionWord::committed(Timestamp::ZERO, VersionOp::Insert),
            link: NIL,
        }
    }
}

/// Neighbor ID with a `[begin, end)` visibility interval: three words.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(C)]
pub struct IntervalEntry {
    pub key: u64,
    pub begin: u64,
    pub end: u64,
}

impl Entry for IntervalEntry {
    const WORDS: usize = 3;

    #[inline]
    fn key(&self) -> u64 {
        self.key
    }

    #[inline]
    fn from_key(key: u64) -> Self {
        IntervalEntry {
            key,
            begin: 0,
            end: INF,
        }
    }
}

const _: () = assert!(size_of::<PlainEntry>() == PlainEntry::WORDS * WORD_BYTES);
const _: () = assert!(size_of::<VersionedEntry>() == VersionedEntry::WORDS * WORD_BYTES);
const _: () = assert!(size_of::<IntervalEntry>() == IntervalEntry::WORDS * WORD_BYTES);

/// Parameters shared by every container.
#[derive(Clone, Debug)]
pub struct NeighborConfig {
    /// Block capacity `B` for segmented and CoW containers.
    pub block_size: usize,
    /// Physical size above which the adaptive container leaves its sorted
    /// array; 0 starts segmented.
    pub adaptive_threshold: usize,
    /// Bloom bytes are `ceil(block_bytes / bloom_ratio)`; 0 disables the
    /// filter.
    pub bloom_ratio: usize,
    /// Difference-encode CoW blocks of packable entries.
    pub compress: bool,
}

impl Default for NeighborConfig {
    fn default() -> Self {
        NeighborConfig {
            block_size: 256,
            adaptive_threshold: 256,
            bloom_ratio: 16,
            compress: false,
        }
    }
}

/// Byte accounting for one container.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ContainerMemory {
    /// `len * WORDS * 8`.
    pub payload_bytes: usize,
    /// Slack slots, gaps, bitmaps, index nodes, filters.
    pub overhead_bytes: usize,
}

impl std::ops::AddAssign for ContainerMemory {
    fn add_assign(&mut self, o: Self) {
        self.payload_bytes += o.payload_bytes;
        self.overhead_bytes += o.overhead_bytes;
    }
}

/// A keyed store of entries for one vertex.
pub trait NeighborIndex<E: Entry>: Clone + Send + Sync + 'static {
    /// Whether `for_each` yields ascending keys.
    const SORTED: bool;

    fn new(cfg: &NeighborConfig) -> Self;

    /// Build from entries with strictly ascending keys.
    fn bulk_load(cfg: &NeighborConfig, sorted: Vec<E>) -> Self {
        let mut s = Self::new(cfg);
        for e in sorted {
            s.insert(e);
        }
        s
    }

    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Copy of the entry for `key`.
    fn find<P: Probe>(&self, key: u64, probe: &mut P) -> Option<E>;

    #[inline]
    fn get(&self, key: u64) -> Option<E> {
        self.find(key, &mut ())
    }

    fn get_mut(&mut self, key: u64) -> Option<&mut E>;

    /// Add an entry whose key is absent.
    fn insert(&mut self, e: E);

    fn remove(&mut self, key: u64) -> Option<E>;

    /// Visit entries; sorted containers go in ascending key order, unsorted
    /// ones newest first.
    fn for_each<F: FnMut(&E)>(&self, f: F);

    fn for_each_mut<F: FnMut(&mut E)>(&mut self, f: F);

    fn memory(&self) -> ContainerMemory;

    /// Structural invariants of the container.
    fn check(&self) -> Result<(), String>;
}

#[inline]
pub(crate) fn payload_bytes<E: Entry>(n: usize) -> usize {
    n * E::WORDS * WORD_BYTES
}
