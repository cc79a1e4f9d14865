//! Copy-on-write segmented tree.
//!
//! Elements are chunked into blocks: a neighbor `v` with `v mod B == 0` is a
//! head and starts a block that runs until the next head; elements below the
//! first head live in a prefix block. Blocks sit behind `Arc` inside a
//! persistent AVL keyed by head, so cloning the set is O(1) and a write copies
//! only the touched block and its tree path. Blocks have no empty slots.

use std::mem::size_of;
use std::sync::Arc;

use super::{codec, ContainerMemory, Entry, NeighborConfig, NeighborIndex};
use crate::pavl;
use crate::probe::Probe;

#[derive(Clone, Debug)]
enum Block<E> {
    Raw(Vec<E>),
    Packed { bytes: Box<[u8]>, len: u32 },
}

impl<E: Entry> Block<E> {
    fn new(items: Vec<E>, compress: bool) -> Self {
        let mut b = Block::Raw(items);
        b.repack(compress);
        b
    }

    fn len(&self) -> usize {
        match self {
            Block::Raw(v) => v.len(),
            Block::Packed { len, .. } => *len as usize,
        }
    }

    fn repack(&mut self, compress: bool) {
        if compress && E::PACKABLE {
            if let Block::Raw(v) = self {
                let keys: Vec<u64> = v.iter().map(|e| e.key()).collect();
                *self = Block::Packed {
                    bytes: codec::encode(&keys).into_boxed_slice(),
                    len: keys.len() as u32,
                };
            }
        }
    }

    fn raw_mut(&mut self) -> &mut Vec<E> {
        if let Block::Packed { bytes, len } = self {
            let keys = codec::decode(bytes, *len as usize).expect("packed block");
            *self = Block::Raw(keys.into_iter().map(E::from_key).collect());
        }
        match self {
            Block::Raw(v) => v,
            Block::Packed { .. } => unreachable!(),
        }
    }

    fn to_vec(&self) -> Vec<E> {
        let mut out = Vec::with_capacity(self.len());
        self.for_each(|e| out.push(*e));
        out
    }

    fn for_each(&self, mut f: impl FnMut(&E)) {
        match self {
            Block::Raw(v) => v.iter().for_each(f),
            Block::Packed { bytes, len } => codec::for_each(bytes, *len as usize, |k| {
                f(&E::from_key(k));
                true
            }),
        }
    }

    fn find<P: Probe>(&self, key: u64, probe: &mut P) -> Option<E> {
        match self {
            Block::Raw(v) => {
                let (mut lo, mut hi) = (0, v.len());
                while lo < hi {
                    let mid = lo + (hi - lo) / 2;
                    probe.compare();
                    match v[mid].key().cmp(&key) {
                        std::cmp::Ordering::Less => lo = mid + 1,
                        std::cmp::Ordering::Greater => hi = mid,
                        std::cmp::Ordering::Equal => return Some(v[mid]),
                    }
                }
                None
            }
            Block::Packed { bytes, len } => {
                let mut hit = None;
                codec::for_each(bytes, *len as usize, |k| {
                    probe.compare();
                    if k == key {
                        hit = Some(E::from_key(k));
                    }
                    k < key
                });
                hit
            }
        }
    }

    fn first_key(&self) -> Option<u64> {
        match self {
            Block::Raw(v) => v.first().map(|e| e.key()),
            Block::Packed { bytes, len } => {
                let mut first = None;
                codec::for_each(bytes, *len as usize, |k| {
                    first = Some(k);
                    false
                });
                first
            }
        }
    }

    fn last_key(&self) -> Option<u64> {
        match self {
            Block::Raw(v) => v.last().map(|e| e.key()),
            Block::Packed { bytes, len } => {
                let mut last = None;
                codec::for_each(bytes, *len as usize, |k| {
                    last = Some(k);
                    true
                });
                last
            }
        }
    }

    fn bytes(&self) -> (usize, usize) {
        match self {
            Block::Raw(v) => (v.len() * size_of::<E>(), (v.capacity() - v.len()) * size_of::<E>()),
            Block::Packed { bytes, .. } => (bytes.len(), 0),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CowSet<E> {
    prefix: Option<Arc<Block<E>>>,
    tree: pavl::Map<Arc<Block<E>>>,
    len: usize,
    b: u64,
    compress: bool,
}

impl<E: Entry> CowSet<E> {
    pub fn with_block_size(b: usize, compress: bool) -> Self {
        assert!(b >= 2, "block size must be at least 2");
        CowSet {
            prefix: None,
            tree: pavl::Map::new(),
            len: 0,
            b: b as u64,
            compress,
        }
    }

    #[inline]
    fn is_head(&self, key: u64) -> bool {
        key % self.b == 0
    }

    pub fn block_size(&self) -> usize {
        self.b as usize
    }

    /// Heads of the non-prefix blocks, ascending.
    pub fn heads(&self) -> Vec<u64> {
        self.tree.keys().collect()
    }

    pub fn has_prefix(&self) -> bool {
        self.prefix.is_some()
    }

    /// Number of blocks (prefix included) not physically shared with
    /// `other`.
    pub fn blocks_not_shared_with(&self, other: &CowSet<E>) -> usize {
        let theirs: std::collections::HashSet<usize> = other
            .prefix
            .iter()
            .chain(other.tree.values())
            .map(|b| Arc::as_ptr(b) as usize)
            .collect();
        self.prefix
            .iter()
            .chain(self.tree.values())
            .filter(|b| !theirs.contains(&(Arc::as_ptr(b) as usize)))
            .count()
    }

    fn block_mut(&mut self, key: u64) -> &mut Vec<E> {
        match self.tree.floor(key).map(|(h, _)| h) {
            Some(h) => Arc::make_mut(self.tree.get_mut(h).expect("floor")).raw_mut(),
            None => Arc::make_mut(
                self.prefix
                    .get_or_insert_with(|| Arc::new(Block::Raw(Vec::new()))),
            )
            .raw_mut(),
        }
    }

    fn repack_at(&mut self, key: u64) {
        if !(self.compress && E::PACKABLE) {
            return;
        }
        match self.tree.floor(key).map(|(h, _)| h) {
            Some(h) => Arc::make_mut(self.tree.get_mut(h).expect("floor")).repack(true),
            None => {
                if let Some(p) = self.prefix.as_mut() {
                    Arc::make_mut(p).repack(true);
                }
            }
        }
    }
}

impl<E: Entry> NeighborIndex<E> for CowSet<E> {
    const SORTED: bool = true;

    fn new(cfg: &NeighborConfig) -> Self {
        Self::with_block_size(cfg.block_size, cfg.compress)
    }

    fn bulk_load(cfg: &NeighborConfig, sorted: Vec<E>) -> Self {
        let mut s = Self::new(cfg);
        s.len = sorted.len();
        let mut pairs = Vec::new();
        let mut cur: Vec<E> = Vec::new();
        let mut cur_head: Option<u64> = None;
        for e in sorted {
            if s.is_head(e.key()) {
                let done = std::mem::take(&mut cur);
                match cur_head {
                    Some(h) => pairs.push((h, Arc::new(Block::new(done, s.compress)))),
                    None if !done.is_empty() => {
                        s.prefix = Some(Arc::new(Block::new(done, s.compress)))
                    }
                    None => {}
                }
                cur_head = Some(e.key());
            }
            cur.push(e);
        }
        match cur_head {
            Some(h) => pairs.push((h, Arc::new(Block::new(cur, s.compress)))),
            None if !cur.is_empty() => s.prefix = Some(Arc::new(Block::new(cur, s.compress))),
            None => {}
        }
        s.tree = pavl::Map::from_sorted(pairs);
        s
    }

    #[inline]
    fn len(&self) -> usize {
        self.len
    }

    fn find<P: Probe>(&self, key: u64, probe: &mut P) -> Option<E> {
        match self.tree.floor(key) {
            Some((_, blk)) => blk.find(key, probe),
            None => self.prefix.as_ref()?.find(key, probe),
        }
    }

    fn get_mut(&mut self, key: u64) -> Option<&mut E> {
        self.get(key)?;
        let v = self.block_mut(key);
        let i = v.binary_search_by_key(&key, |e| e.key()).ok()?;
        Some(&mut v[i])
    }

    fn insert(&mut self, e: E) {
        let key = e.key();
        if self.is_head(key) {
            let holder_last = match self.tree.floor(key) {
                Some((_, blk)) => blk.last_key(),
                None => self.prefix.as_ref().and_then(|p| p.last_key()),
            };
            let tail = if holder_last.is_none_or(|l| l < key) {
                Vec::new()
            } else {
                let v = self.block_mut(key);
                let at = v.partition_point(|x| x.key() < key);
                debug_assert!(v.get(at).is_none_or(|x| x.key() != key));
                v.split_off(at)
            };
            if self.prefix.as_ref().is_some_and(|p| p.len() == 0) {
                self.prefix = None;
            }
            if !tail.is_empty() && key > 0 {
                self.repack_at(key - 1);
            }
            let mut items = Vec::with_capacity(tail.len() + 1);
            items.push(e);
            items.extend(tail);
            self.tree.insert(key, Arc::new(Block::new(items, self.compress)));
        } else {
            let v = self.block_mut(key);
            match v.binary_search_by_key(&key, |x| x.key()) {
                Ok(_) => debug_assert!(false, "duplicate key {key}"),
                Err(i) => v.insert(i, e),
            }
            self.repack_at(key);
        }
        self.len += 1;
    }

    fn remove(&mut self, key: u64) -> Option<E> {
        if self.is_head(key) && self.tree.contains_key(key) {
            let blk = self.tree.remove(key).expect("head");
            let mut items = blk.to_vec();
            let e = items.remove(0);
            if !items.is_empty() {
                // key > 0 here unless the head is 0, which has no predecessor.
                let v = if key == 0 {
                    Arc::make_mut(self.prefix.get_or_insert_with(|| Arc::new(Block::Raw(Vec::new()))))
                        .raw_mut()
                } else {
                    self.block_mut(key - 1)
                };
                v.extend(items);
                if key > 0 {
                    self.repack_at(key - 1);
                }
            }
            self.len -= 1;
            return Some(e);
        }
        self.get(key)?;
        let v = self.block_mut(key);
        let i = v.binary_search_by_key(&key, |x| x.key()).ok()?;
        let e = v.remove(i);
        let now_empty = v.is_empty();
        if now_empty {
            debug_assert!(self.tree.floor(key).is_none());
            self.prefix = None;
        } else {
            self.repack_at(key);
        }
        self.len -= 1;
        Some(e)
    }

    fn for_each<F: FnMut(&E)>(&self, mut f: F) {
        if let Some(p) = &self.prefix {
            p.for_each(&mut f);
        }
        for blk in self.tree.values() {
            blk.for_each(&mut f);
        }
    }

    fn for_each_mut<F: FnMut(&mut E)>(&mut self, mut f: F) {
        if let Some(p) = self.prefix.as_mut() {
            Arc::make_mut(p).raw_mut().iter_mut().for_each(&mut f);
        }
        self.tree.for_each_mut(|_, blk| {
            Arc::make_mut(blk).raw_mut().iter_mut().for_each(&mut f);
        });
    }

    fn memory(&self) -> ContainerMemory {
        // Tree node: key, Arc pointer, height, two links plus the Arc
        // counters; each block adds its own Arc header and Vec header.
        const NODE_BYTES: usize = 8 + 8 + 8 + 16 + 16;
        const BLOCK_HEADER: usize = 16 + size_of::<Vec<u8>>();
        let mut payload = 0;
        let mut slack = 0;
        let mut blocks = 0;
        for blk in self.prefix.iter().chain(self.tree.values()) {
            let (p, s) = blk.bytes();
            payload += p;
            slack += s;
            blocks += 1;
        }
        ContainerMemory {
            payload_bytes: payload,
            overhead_bytes: slack + blocks * BLOCK_HEADER + self.tree.len() * NODE_BYTES,
        }
    }

    fn check(&self) -> Result<(), String> {
        self.tree.check()?;
        let mut count = 0;
        if let Some(p) = &self.prefix {
            if p.len() == 0 {
                return Err("empty prefix block".into());
            }
            let first_head = self.tree.first().map(|(h, _)| h);
            let mut bad = None;
            p.for_each(|e| {
                if self.is_head(e.key()) || first_head.is_some_and(|h| e.key() >= h) {
                    bad = Some(e.key());
                }
            });
            if let Some(k) = bad {
                return Err(format!("prefix holds {k}"));
            }
            count += p.len();
        }
        let heads: Vec<u64> = self.tree.keys().collect();
        for (i, (h, blk)) in self.tree.iter().enumerate() {
            if h % self.b != 0 {
                return Err(format!("head {h} is not a multiple of {}", self.b));
            }
            if blk.first_key() != Some(h) {
                return Err(format!("block {h} starts with {:?}", blk.first_key()));
            }
            let next = heads.get(i + 1).copied();
            let items = blk.to_vec();
            for w in items.windows(2) {
                if w[0].key() >= w[1].key() {
                    return Err(format!("block {h} unsorted"));
                }
            }
            for e in &items[1..] {
                if self.is_head(e.key()) || next.is_some_and(|n| e.key() >= n) {
                    return Err(format!("block {h} holds {}", e.key()));
                }
            }
            count += items.len();
        }
        if count != self.len {
            return Err(format!("len {} but {count} stored", self.len));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neighbor::testing::run_model;
    use crate::neighbor::PlainEntry;

    fn cfg(b: usize, compress: bool) -> NeighborConfig {
        NeighborConfig {
            block_size: b,
            compress,
            ..NeighborConfig::default()
        }
    }

    fn keys(s: &CowSet<PlainEntry>) -> Vec<u64> {
        let mut out = vec![];
        s.for_each(|e| out.push(e.0));
        out
    }

    #[test]
    fn model() {
        run_model::<CowSet<PlainEntry>>(&cfg(4, false), 20_000, 400, 7);
        run_model::<CowSet<PlainEntry>>(&cfg(16, true), 20_000, 2000, 8);
    }

    #[test]
    fn head_insert_splits_block() {
        let c = cfg(4, false);
        let mut s = CowSet::bulk_load(&c, [1, 2, 3, 5, 6, 7].map(PlainEntry).to_vec());
        assert!(s.heads().is_empty() && s.has_prefix());
        s.insert(PlainEntry(4));
        assert_eq!(s.heads(), vec![4]);
        assert_eq!(keys(&s), vec![1, 2, 3, 4, 5, 6, 7]);
        s.check().unwrap();
        s.remove(4);
        assert!(s.heads().is_empty());
        assert_eq!(keys(&s), vec![1, 2, 3, 5, 6, 7]);
        s.check().unwrap();
    }

    #[test]
    fn writes_leave_old_version_intact() {
        let c = cfg(8, false);
        let s0 = CowSet::bulk_load(&c, (0..200u64).map(PlainEntry).collect());
        let mut s1 = s0.clone();
        s1.insert(PlainEntry(1001));
        s1.remove(17);
        assert_eq!(keys(&s0), (0..200).collect::<Vec<_>>());
        assert_eq!(s1.len(), 200);
        // Only the two touched blocks differ.
        assert_eq!(s1.blocks_not_shared_with(&s0), 2);
    }

    #[test]
    fn compressed_blocks_answer_lookups() {
        let c = cfg(64, true);
        let s = CowSet::bulk_load(&c, (0..500u64).map(|k| PlainEntry(k * 3)).collect());
        assert_eq!(s.get(300).map(|e| e.0), Some(300));
        assert!(s.get(301).is_none());
        assert!(s.memory().payload_bytes < 500 * 8);
    }

    #[test]
    fn heads_partition_example() {
        let c = cfg(256, false);
        let ks = [1, 255, 256, 511, 513, 768];
        let s = CowSet::bulk_load(&c, ks.map(PlainEntry).to_vec());
        assert!(s.has_prefix());
        assert_eq!(s.heads(), vec![256, 768]);
        assert_eq!(keys(&s), ks.to_vec());
        s.check().unwrap();
    }
}
