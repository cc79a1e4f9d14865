//! Segmented skip list: sorted blocks of capacity `B` linked by a skip list
//! keyed on each block's first element.
//!
//! A full block splits into equal halves before an insert; a block that
//! drops under `B/2` merges with or borrows from a neighbor. The only block
//! allowed below half full is the sole block of a small set.

use std::mem::size_of;

use super::{payload_bytes, ContainerMemory, Entry, NeighborConfig, NeighborIndex};
use crate::probe::Probe;
use crate::rng::SplitMix64;

pub const MAX_HEIGHT: usize = 24;
const NONE: u32 = u32::MAX;
const HEAD: u32 = u32::MAX - 1;

#[derive(Clone, Debug)]
struct Node<E> {
    block: Vec<E>,
    next: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct SegmentedSkipList<E> {
    nodes: Vec<Node<E>>,
    free: Vec<u32>,
    head: [u32; MAX_HEIGHT],
    height: usize,
    cap: usize,
    len: usize,
    blocks: usize,
    rng: SplitMix64,
}

impl<E: Entry> SegmentedSkipList<E> {
    pub fn with_block_size(cap: usize) -> Self {
        assert!(cap >= 4 && cap % 2 == 0, "block size must be even and >= 4");
        SegmentedSkipList {
            nodes: Vec::new(),
            free: Vec::new(),
            head: [NONE; MAX_HEIGHT],
            height: 1,
            cap,
            len: 0,
            blocks: 0,
            rng: SplitMix64::new(0x5eed_b10c),
        }
    }

    pub fn block_size(&self) -> usize {
        self.cap
    }

    pub fn block_count(&self) -> usize {
        self.blocks
    }

    /// Block lengths in order (test helper).
    pub fn block_lens(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut x = self.head[0];
        while x != NONE {
            out.push(self.nodes[x as usize].block.len());
            x = self.nodes[x as usize].next[0];
        }
        out
    }

    #[inline]
    fn fwd(&self, x: u32, lvl: usize) -> u32 {
        if x == HEAD {
            self.head[lvl]
        } else {
            self.nodes[x as usize].next[lvl]
        }
    }

    #[inline]
    fn set_fwd(&mut self, x: u32, lvl: usize, to: u32) {
        if x == HEAD {
            self.head[lvl] = to;
        } else {
            self.nodes[x as usize].next[lvl] = to;
        }
    }

    #[inline]
    fn first_key(&self, x: u32) -> u64 {
        self.nodes[x as usize].block[0].key()
    }

    /// Last block whose first key is `<= key` (or `HEAD`).
    fn floor_block<P: Probe>(&self, key: u64, probe: &mut P) -> u32 {
        let mut x = HEAD;
        for lvl in (0..self.height).rev() {
            loop {
                let n = self.fwd(x, lvl);
                if n == NONE {
                    break;
                }
                probe.visit();
                if self.first_key(n) <= key {
                    x = n;
                } else {
                    break;
                }
            }
        }
        x
    }

    /// Per-level predecessors of the first block with first key `>= key`.
    fn preds(&self, key: u64) -> [u32; MAX_HEIGHT] {
        let mut up = [HEAD; MAX_HEIGHT];
        let mut x = HEAD;
        for lvl in (0..self.height).rev() {
            loop {
                let n = self.fwd(x, lvl);
                if n != NONE && self.first_key(n) < key {
                    x = n;
                } else {
                    break;
                }
            }
            up[lvl] = x;
        }
        up
    }

    fn random_height(&mut self) -> usize {
        (1 + self.rng.next_u64().trailing_ones() as usize).min(MAX_HEIGHT)
    }

    fn alloc(&mut self, block: Vec<E>) -> u32 {
        let h = self.random_height();
        let node = Node {
            block,
            next: vec![NONE; h],
        };
        self.blocks += 1;
        if let Some(i) = self.free.pop() {
            self.nodes[i as usize] = node;
            i
        } else {
            self.nodes.push(node);
            (self.nodes.len() - 1) as u32
        }
    }

    /// Link a node whose block is already filled.
    fn link(&mut self, x: u32) {
        let key = self.first_key(x);
        let h = self.nodes[x as usize].next.len();
        if h > self.height {
            self.height = h;
        }
        let up = self.preds(key);
        for (lvl, &p) in up.iter().enumerate().take(h) {
            let n = self.fwd(p, lvl);
            self.nodes[x as usize].next[lvl] = n;
            self.set_fwd(p, lvl, x);
        }
    }

    fn unlink(&mut self, x: u32) {
        let key = self.first_key(x);
        let up = self.preds(key);
        let h = self.nodes[x as usize].next.len();
        for (lvl, &p) in up.iter().enumerate().take(h) {
            if self.fwd(p, lvl) == x {
                let n = self.nodes[x as usize].next[lvl];
                self.set_fwd(p, lvl, n);
            }
        }
        while self.height > 1 && self.head[self.height - 1] == NONE {
            self.height -= 1;
        }
        self.nodes[x as usize].block = Vec::new();
        self.nodes[x as usize].next = Vec::new();
        self.free.push(x);
        self.blocks -= 1;
    }

    fn search_block(block: &[E], key: u64) -> Result<usize, usize> {
        block.binary_search_by_key(&key, |e| e.key())
    }

    fn split(&mut self, x: u32) {
        let upper = {
            let b = &mut self.nodes[x as usize].block;
            let half = b.len() / 2;
            let mut upper = Vec::with_capacity(self.cap);
            upper.extend_from_slice(&b[half..]);
            b.truncate(half);
            upper
        };
        let n = self.alloc(upper);
        self.link(n);
    }

    fn prev_block(&self, x: u32) -> u32 {
        let up = self.preds(self.first_key(x));
        up[0]
    }

    /// Restore the fill bound of block `x` after a removal.
    fn fix_underflow(&mut self, x: u32) {
        if self.blocks == 1 {
            if self.nodes[x as usize].block.is_empty() {
                self.unlink_empty_only(x);
            }
            return;
        }
        let (left, right) = match self.nodes[x as usize].next[0] {
            NONE => (self.prev_block(x), x),
            n => (x, n),
        };
        debug_assert!(left != HEAD);
        let total = self.nodes[left as usize].block.len() + self.nodes[right as usize].block.len();
        if total <= self.cap {
            // The right block keeps its entries (and first key) until it is
            // unlinked.
            let moved = self.nodes[right as usize].block.clone();
            self.nodes[left as usize].block.extend(moved);
            self.unlink(right);
        } else {
            let want_left = total.div_ceil(2);
            let have_left = self.nodes[left as usize].block.len();
            if have_left < want_left {
                // Pull from the right block: its first key changes but stays
                // between its neighbors, so links remain valid.
                let k = want_left - have_left;
                let moved: Vec<E> = self.nodes[right as usize].block.drain(..k).collect();
                self.nodes[left as usize].block.extend(moved);
            } else {
                let k = have_left - want_left;
                let lb = &mut self.nodes[left as usize].block;
                let moved: Vec<E> = lb.drain(lb.len() - k..).collect();
                self.nodes[right as usize].block.splice(0..0, moved);
            }
        }
    }

    fn unlink_empty_only(&mut self, x: u32) {
        for lvl in 0..MAX_HEIGHT {
            if self.head[lvl] == x {
                self.head[lvl] = NONE;
            }
        }
        self.height = 1;
        self.nodes.clear();
        self.free.clear();
        self.blocks = 0;
    }
}

impl<E: Entry> NeighborIndex<E> for SegmentedSkipList<E> {
    const SORTED: bool = true;

    fn new(cfg: &NeighborConfig) -> Self {
        Self::with_block_size(cfg.block_size)
    }

    fn bulk_load(cfg: &NeighborConfig, sorted: Vec<E>) -> Self {
        let mut s = Self::with_block_size(cfg.block_size);
        let fill = (s.cap * 3 / 4).max(s.cap / 2);
        let mut chunks: Vec<Vec<E>> = sorted.chunks(fill).map(|c| c.to_vec()).collect();
        if chunks.len() > 1 && chunks.last().is_some_and(|c| c.len() < s.cap / 2) {
            let tail = chunks.pop().expect("non-empty");
            let prev = chunks.last_mut().expect("non-empty");
            prev.extend(tail);
            if prev.len() > s.cap {
                let upper = prev.split_off(prev.len() / 2);
                chunks.push(upper);
            }
        }
        s.len = sorted.len();
        for mut c in chunks {
            c.reserve_exact(s.cap - c.len());
            let x = s.alloc(c);
            s.link(x);
        }
        s
    }

    #[inline]
    fn len(&self) -> usize {
        self.len
    }

    fn find<P: Probe>(&self, key: u64, probe: &mut P) -> Option<E> {
        let x = self.floor_block(key, probe);
        if x == HEAD {
            return None;
        }
        let b = &self.nodes[x as usize].block;
        Self::search_block(b, key).ok().map(|i| b[i])
    }

    fn get_mut(&mut self, key: u64) -> Option<&mut E> {
        let x = self.floor_block(key, &mut ());
        if x == HEAD {
            return None;
        }
        let b = &mut self.nodes[x as usize].block;
        let i = Self::search_block(b, key).ok()?;
        Some(&mut b[i])
    }

    fn insert(&mut self, e: E) {
        let key = e.key();
        if self.head[0] == NONE {
            let mut block = Vec::with_capacity(self.cap);
            block.push(e);
            let x = self.alloc(block);
            self.link(x);
            self.len += 1;
            return;
        }
        let mut x = self.floor_block(key, &mut ());
        if x == HEAD {
            x = self.head[0];
        }
        if self.nodes[x as usize].block.len() == self.cap {
            self.split(x);
            let n = self.nodes[x as usize].next[0];
            if n != NONE && self.first_key(n) <= key {
                x = n;
            }
        }
        let b = &mut self.nodes[x as usize].block;
        match Self::search_block(b, key) {
            Ok(_) => debug_assert!(false, "duplicate key {key}"),
            Err(i) => b.insert(i, e),
        }
        self.len += 1;
    }

    fn remove(&mut self, key: u64) -> Option<E> {
        let x = self.floor_block(key, &mut ());
        if x == HEAD {
            return None;
        }
        let i = Self::search_block(&self.nodes[x as usize].block, key).ok()?;
        // Removing a block's first entry raises its key but keeps it below
        // the next block's, so no relinking is needed.
        let e = self.nodes[x as usize].block.remove(i);
        self.len -= 1;
        if self.nodes[x as usize].block.len() < self.cap / 2 {
            self.fix_underflow(x);
        }
        Some(e)
    }

    fn for_each<F: FnMut(&E)>(&self, mut f: F) {
        let mut x = self.head[0];
        while x != NONE {
            let n = &self.nodes[x as usize];
            n.block.iter().for_each(&mut f);
            x = n.next[0];
        }
    }

    fn for_each_mut<F: FnMut(&mut E)>(&mut self, mut f: F) {
        let mut x = self.head[0];
        while x != NONE {
            let n = &mut self.nodes[x as usize];
            n.block.iter_mut().for_each(&mut f);
            x = n.next[0];
        }
    }

    fn memory(&self) -> ContainerMemory {
        let mut slack = 0;
        let mut towers = 0;
        let mut x = self.head[0];
        while x != NONE {
            let n = &self.nodes[x as usize];
            slack += n.block.capacity() - n.block.len();
            towers += n.next.len() * size_of::<u32>() + size_of::<Node<E>>();
            x = n.next[0];
        }
        ContainerMemory {
            payload_bytes: payload_bytes::<E>(self.len),
            overhead_bytes: slack * size_of::<E>() + towers + size_of::<[u32; MAX_HEIGHT]>(),
        }
    }

    fn check(&self) -> Result<(), String> {
        let lens = self.block_lens();
        if lens.len() != self.blocks {
            return Err(format!("{} linked blocks, {} counted", lens.len(), self.blocks));
        }
        if lens.iter().sum::<usize>() != self.len {
            return Err("length mismatch".into());
        }
        for (i, &l) in lens.iter().enumerate() {
            if l > self.cap || (lens.len() > 1 && l < self.cap / 2) || l == 0 {
                return Err(format!("block {i} holds {l} of {}", self.cap));
            }
        }
        let mut prev: Option<u64> = None;
        let mut bad = false;
        self.for_each(|e| {
            bad |= prev.is_some_and(|p| p >= e.key());
            prev = Some(e.key());
        });
        if bad {
            return Err("unsorted".into());
        }
        for lvl in 1..self.height {
            let mut x = self.head[lvl];
            let mut last: Option<u64> = None;
            while x != NONE {
                let k = self.first_key(x);
                if last.is_some_and(|l| l >= k) {
                    return Err(format!("level {lvl} out of order"));
                }
                last = Some(k);
                x = self.nodes[x as usize].next[lvl];
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neighbor::testing::run_model;
    use crate::neighbor::PlainEntry;
    use crate::probe::OpCounts;

    fn cfg(b: usize) -> NeighborConfig {
        NeighborConfig {
            block_size: b,
            ..NeighborConfig::default()
        }
    }

    #[test]
    fn model_small_blocks() {
        run_model::<SegmentedSkipList<PlainEntry>>(&cfg(4), 20_000, 500, 4);
        run_model::<SegmentedSkipList<PlainEntry>>(&cfg(16), 20_000, 2000, 5);
    }

    #[test]
    fn split_into_halves() {
        let mut s = SegmentedSkipList::<PlainEntry>::with_block_size(4);
        for k in 1..=4 {
            s.insert(PlainEntry(k));
        }
        assert_eq!(s.block_lens(), vec![4]);
        s.insert(PlainEntry(5));
        assert_eq!(s.block_lens(), vec![2, 3]);
        let mut keys = vec![];
        s.for_each(|e| keys.push(e.0));
        assert_eq!(keys, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn merge_on_underflow() {
        let mut s = SegmentedSkipList::<PlainEntry>::with_block_size(4);
        for k in 1..=5 {
            s.insert(PlainEntry(k));
        }
        s.remove(1);
        s.check().unwrap();
        assert_eq!(s.block_lens(), vec![4]);
    }

    #[test]
    fn search_visits_grow_logarithmically() {
        let c = cfg(16);
        let mut avg = vec![];
        for n in [1u64 << 10, 1 << 14] {
            let s = SegmentedSkipList::bulk_load(&c, (0..n).map(PlainEntry).collect());
            let mut counts = OpCounts::default();
            for k in (0..n).step_by(7) {
                s.find(k, &mut counts);
            }
            avg.push(counts.visits as f64 / (n / 7) as f64);
        }
        assert!(avg[1] < avg[0] * 2.5, "{avg:?}");
    }

    #[test]
    fn search_descends_to_predecessor_block() {
        let s = SegmentedSkipList::bulk_load(&cfg(4), [1, 2, 3, 40, 41, 42, 90, 91, 92].map(PlainEntry).to_vec());
        assert_eq!(s.block_lens(), vec![3, 3, 3]);
        assert_eq!(s.first_key(s.floor_block(55, &mut ())), 40);
        assert_eq!(s.get(55), None);
        assert_eq!(s.get(41), Some(PlainEntry(41)));
    }
}
