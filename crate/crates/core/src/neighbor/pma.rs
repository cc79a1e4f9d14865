//! Packed memory array: a sorted array with interleaved gaps.
//!
//! The array is divided into power-of-two leaf segments; windows of
//! `segment << level` cells form an implicit binary tree over them. Density
//! thresholds are interpolated linearly from leaf to root:
//! upper 1.0 -> 0.75, lower 0.125 -> 0.25. An insert that finds its leaf full
//! climbs to the smallest enclosing window whose density (including the new
//! element) stays under that level's upper bound and spreads the window
//! evenly. The whole array doubles when root density would exceed 0.75 and
//! halves when it falls below 0.25.

use std::mem::size_of;

use super::{payload_bytes, ContainerMemory, Entry, NeighborConfig, NeighborIndex};
use crate::probe::Probe;

pub const MIN_CAPACITY: usize = 8;
pub const LEAF_UPPER: f64 = 1.0;
pub const ROOT_UPPER: f64 = 0.75;
pub const LEAF_LOWER: f64 = 0.125;
pub const ROOT_LOWER: f64 = 0.25;

/// Record of the most recent window rebalance, kept for invariant checks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rebalance {
    pub start: usize,
    pub size: usize,
    pub level: u32,
    pub count: usize,
    pub on_insert: bool,
}

#[derive(Clone, Debug)]
pub struct Pma<E> {
    cells: Vec<E>,
    occ: Vec<u64>,
    len: usize,
    seg: usize,
    fixed_seg: Option<usize>,
    moves: u64,
    last: Option<Rebalance>,
}

fn auto_segment(cap: usize) -> usize {
    let log = (usize::BITS - (cap.max(2) - 1).leading_zeros()) as usize;
    log.next_power_of_two().clamp(4, cap)
}

impl<E: Entry> Pma<E> {
    /// Fixed geometry for tests; `capacity` and `segment` are powers of two.
    pub fn with_geometry(capacity: usize, segment: usize) -> Self {
        assert!(capacity.is_power_of_two() && segment.is_power_of_two());
        assert!(segment <= capacity && segment >= 2);
        let mut p = Self::empty(capacity);
        p.seg = segment;
        p.fixed_seg = Some(segment);
        p
    }

    fn empty(cap: usize) -> Self {
        Pma {
            cells: vec![E::from_key(0); cap],
            occ: vec![0; cap.div_ceil(64)],
            len: 0,
            seg: auto_segment(cap),
            fixed_seg: None,
            moves: 0,
            last: None,
        }
    }

    pub fn capacity(&self) -> usize {
        self.cells.len()
    }

    pub fn segment_size(&self) -> usize {
        self.seg
    }

    /// Total element moves performed by inserts, deletes and rebalances.
    pub fn moves(&self) -> u64 {
        self.moves
    }

    pub fn last_rebalance(&self) -> Option<Rebalance> {
        self.last
    }

    /// Cell layout with `None` for gaps (test helper).
    pub fn layout(&self) -> Vec<Option<u64>> {
        (0..self.capacity())
            .map(|i| self.is_occ(i).then(|| self.cells[i].key()))
            .collect()
    }

    fn height(&self) -> u32 {
        (self.capacity() / self.seg).trailing_zeros()
    }

    pub fn upper(&self, level: u32) -> f64 {
        let h = self.height();
        if h == 0 {
            return ROOT_UPPER;
        }
        LEAF_UPPER + (ROOT_UPPER - LEAF_UPPER) * level as f64 / h as f64
    }

    pub fn lower(&self, level: u32) -> f64 {
        let h = self.height();
        if h == 0 {
            return ROOT_LOWER;
        }
        LEAF_LOWER + (ROOT_LOWER - LEAF_LOWER) * level as f64 / h as f64
    }

    #[inline]
    fn is_occ(&self, i: usize) -> bool {
        self.occ[i / 64] & (1 << (i % 64)) != 0
    }

    #[inline]
    fn set_occ(&mut self, i: usize) {
        self.occ[i / 64] |= 1 << (i % 64);
    }

    #[inline]
    fn clear_occ(&mut self, i: usize) {
        self.occ[i / 64] &= !(1 << (i % 64));
    }

    fn count(&self, a: usize, b: usize) -> usize {
        let mut n = 0;
        let mut i = a;
        while i < b {
            if i % 64 == 0 && i + 64 <= b {
                n += self.occ[i / 64].count_ones() as usize;
                i += 64;
            } else {
                n += self.is_occ(i) as usize;
                i += 1;
            }
        }
        n
    }

    /// First occupied cell in `[a, b)`.
    fn next_occ(&self, a: usize, b: usize) -> Option<usize> {
        let mut i = a;
        while i < b {
            let w = self.occ[i / 64] >> (i % 64);
            if w != 0 {
                let c = i + w.trailing_zeros() as usize;
                return (c < b).then_some(c);
            }
            i = (i / 64 + 1) * 64;
        }
        None
    }

    /// `Ok(cell)` holding `key`, or `Err(pred)` with the last cell whose key
    /// is smaller.
    fn locate<P: Probe>(&self, key: u64, probe: &mut P) -> Result<usize, Option<usize>> {
        let seg = self.seg;
        let (mut lo, mut hi) = (0, self.capacity() / seg);
        let mut cand = None;
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            match self.next_occ(mid * seg, hi * seg) {
                None => hi = mid,
                Some(c) => {
                    probe.compare();
                    let k = self.cells[c].key();
                    if k == key {
                        return Ok(c);
                    }
                    if k < key {
                        cand = Some(c);
                        lo = c / seg + 1;
                    } else {
                        hi = mid;
                    }
                }
            }
        }
        let Some(start) = cand else { return Err(None) };
        let end = (start / seg + 1) * seg;
        let mut pred = start;
        let mut i = start + 1;
        while let Some(c) = self.next_occ(i, end) {
            probe.compare();
            let k = self.cells[c].key();
            if k == key {
                return Ok(c);
            }
            if k > key {
                break;
            }
            pred = c;
            i = c + 1;
        }
        Err(Some(pred))
    }

    /// Try to put `e` right after `pred` inside segment `s` by shifting
    /// toward the nearest gap. Returns false if the segment is full.
    fn place_in_segment(&mut self, s: usize, pred: Option<usize>, e: E) -> bool {
        let a = s * self.seg;
        let b = a + self.seg;
        let ip = pred.map_or(a, |p| p + 1);
        if ip < b && !self.is_occ(ip) {
            self.cells[ip] = e;
            self.set_occ(ip);
            return true;
        }
        let right = (ip..b).find(|&i| !self.is_occ(i));
        let left = (a..ip).rev().find(|&i| !self.is_occ(i));
        let cost_r = right.map(|r| r - ip);
        let cost_l = left.map(|l| ip - 1 - l);
        let go_right = match (cost_r, cost_l) {
            (None, None) => return false,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (Some(r), Some(l)) => r <= l,
        };
        if go_right {
            let r = right.expect("gap");
            self.cells.copy_within(ip..r, ip + 1);
            self.set_occ(r);
            self.cells[ip] = e;
            self.moves += (r - ip) as u64;
        } else {
            let l = left.expect("gap");
            self.cells.copy_within(l + 1..ip, l);
            self.set_occ(l);
            self.cells[ip - 1] = e;
            self.moves += (ip - 1 - l) as u64;
        }
        true
    }

    fn collect(&self, a: usize, b: usize, extra: Option<E>) -> Vec<E> {
        let mut out = Vec::with_capacity(self.count(a, b) + 1);
        let mut extra = extra;
        let mut i = a;
        while let Some(c) = self.next_occ(i, b) {
            let cur = self.cells[c];
            if let Some(x) = extra {
                if x.key() < cur.key() {
                    out.push(x);
                    extra = None;
                }
            }
            out.push(cur);
            i = c + 1;
        }
        if let Some(x) = extra {
            out.push(x);
        }
        out
    }

    fn write_even(&mut self, start: usize, size: usize, items: &[E]) {
        for i in start..start + size {
            self.clear_occ(i);
        }
        let n = items.len();
        for (i, e) in items.iter().enumerate() {
            let pos = start + i * size / n;
            self.cells[pos] = *e;
            self.set_occ(pos);
        }
        self.moves += n as u64;
    }

    fn spread(&mut self, start: usize, size: usize, level: u32, extra: Option<E>) {
        let on_insert = extra.is_some();
        let items = self.collect(start, start + size, extra);
        self.write_even(start, size, &items);
        self.last = Some(Rebalance {
            start,
            size,
            level,
            count: items.len(),
            on_insert,
        });
    }

    fn resize(&mut self, cap: usize, extra: Option<E>) {
        let on_insert = extra.is_some();
        let items = self.collect(0, self.capacity(), extra);
        self.cells = vec![E::from_key(0); cap];
        self.occ = vec![0; cap.div_ceil(64)];
        self.seg = self.fixed_seg.map_or_else(|| auto_segment(cap), |s| s.min(cap));
        self.write_even(0, cap, &items);
        let level = self.height();
        self.last = Some(Rebalance {
            start: 0,
            size: cap,
            level,
            count: items.len(),
            on_insert,
        });
    }
}

impl<E: Entry> NeighborIndex<E> for Pma<E> {
    const SORTED: bool = true;

    fn new(_cfg: &NeighborConfig) -> Self {
        Self::empty(MIN_CAPACITY)
    }

    fn bulk_load(_cfg: &NeighborConfig, sorted: Vec<E>) -> Self {
        let cap = (2 * sorted.len()).next_power_of_two().max(MIN_CAPACITY);
        let mut p = Self::empty(cap);
        if !sorted.is_empty() {
            p.write_even(0, cap, &sorted);
        }
        p.len = sorted.len();
        p.moves = 0;
        p
    }

    #[inline]
    fn len(&self) -> usize {
        self.len
    }

    fn find<P: Probe>(&self, key: u64, probe: &mut P) -> Option<E> {
        self.locate(key, probe).ok().map(|c| self.cells[c])
    }

    fn get_mut(&mut self, key: u64) -> Option<&mut E> {
        let c = self.locate(key, &mut ()).ok()?;
        Some(&mut self.cells[c])
    }

    fn insert(&mut self, e: E) {
        if (self.len + 1) as f64 > ROOT_UPPER * self.capacity() as f64 {
            let cap = self.capacity() * 2;
            self.resize(cap, Some(e));
            self.len += 1;
            return;
        }
        let pred = match self.locate(e.key(), &mut ()) {
            Ok(_) => {
                debug_assert!(false, "duplicate key {}", e.key());
                return;
            }
            Err(p) => p,
        };
        let s = pred.map_or(0, |p| p / self.seg);
        if !self.place_in_segment(s, pred, e) {
            let h = self.height();
            let mut placed = false;
            for level in 1..=h {
                let size = self.seg << level;
                let start = (s * self.seg) & !(size - 1);
                let count = self.count(start, start + size) + 1;
                if count as f64 <= self.upper(level) * size as f64 {
                    self.spread(start, size, level, Some(e));
                    placed = true;
                    break;
                }
            }
            if !placed {
                let cap = self.capacity() * 2;
                self.resize(cap, Some(e));
            }
        }
        self.len += 1;
    }

    fn remove(&mut self, key: u64) -> Option<E> {
        let c = self.locate(key, &mut ()).ok()?;
        let e = self.cells[c];
        self.clear_occ(c);
        self.len -= 1;
        let cap = self.capacity();
        if cap > MIN_CAPACITY && (self.len as f64) < ROOT_LOWER * cap as f64 {
            self.resize(cap / 2, None);
            return Some(e);
        }
        let s = c / self.seg;
        let a = s * self.seg;
        if (self.count(a, a + self.seg) as f64) < LEAF_LOWER * self.seg as f64 {
            for level in 1..=self.height() {
                let size = self.seg << level;
                let start = a & !(size - 1);
                let count = self.count(start, start + size);
                if count as f64 >= self.lower(level) * size as f64 {
                    self.spread(start, size, level, None);
                    break;
                }
            }
        }
        Some(e)
    }

    fn for_each<F: FnMut(&E)>(&self, mut f: F) {
        let mut i = 0;
        let cap = self.capacity();
        while let Some(c) = self.next_occ(i, cap) {
            f(&self.cells[c]);
            i = c + 1;
        }
    }

    fn for_each_mut<F: FnMut(&mut E)>(&mut self, mut f: F) {
        let mut i = 0;
        let cap = self.capacity();
        while let Some(c) = self.next_occ(i, cap) {
            f(&mut self.cells[c]);
            i = c + 1;
        }
    }

    fn memory(&self) -> ContainerMemory {
        ContainerMemory {
            payload_bytes: payload_bytes::<E>(self.len),
            overhead_bytes: (self.capacity() - self.len) * size_of::<E>() + self.occ.len() * 8,
        }
    }

    fn check(&self) -> Result<(), String> {
        let cap = self.capacity();
        if self.count(0, cap) != self.len {
            return Err(format!("len {} but {} occupied", self.len, self.count(0, cap)));
        }
        let mut prev: Option<u64> = None;
        let mut bad = None;
        self.for_each(|e| {
            if prev.is_some_and(|p| p >= e.key()) && bad.is_none() {
                bad = Some(e.key());
            }
            prev = Some(e.key());
        });
        if let Some(k) = bad {
            return Err(format!("unsorted at key {k}"));
        }
        let density = self.len as f64 / cap as f64;
        if density > ROOT_UPPER {
            return Err(format!("root density {density} above {ROOT_UPPER}"));
        }
        if cap > MIN_CAPACITY && density < ROOT_LOWER {
            return Err(format!("root density {density} below {ROOT_LOWER}"));
        }
        for s in 0..cap / self.seg {
            let a = s * self.seg;
            if self.count(a, a + self.seg) as f64 > LEAF_UPPER * self.seg as f64 {
                return Err(format!("segment {s} overfull"));
            }
        }
        if let Some(r) = self.last {
            let d = r.count as f64 / r.size as f64;
            let ok = if r.on_insert {
                d <= self.upper(r.level) + 1e-12 || r.start == 0 && r.size == cap
            } else {
                d >= self.lower(r.level) - 1e-12 || r.start == 0 && r.size == cap
            };
            if !ok {
                return Err(format!("rebalance {r:?} outside level bounds"));
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

    fn pe(k: u64) -> PlainEntry {
        PlainEntry(k)
    }

    #[test]
    fn model() {
        run_model::<Pma<PlainEntry>>(&NeighborConfig::default(), 20_000, 2000, 3);
    }

    #[test]
    fn insert_into_gap() {
        let mut p = Pma::<PlainEntry>::with_geometry(8, 4);
        for k in [1, 3, 7] {
            p.insert(pe(k));
        }
        let lay = p.layout();
        assert_eq!(&lay[..3], &[Some(1), Some(3), Some(7)]);
        // Reshape the first segment to [1, 3, _, 7].
        p.cells[3] = pe(7);
        p.clear_occ(2);
        p.set_occ(3);
        let before = p.moves();
        p.insert(pe(5));
        assert_eq!(&p.layout()[..4], &[Some(1), Some(3), Some(5), Some(7)]);
        assert_eq!(p.moves(), before);
    }

    #[test]
    fn full_leaf_triggers_window_rebalance() {
        let mut p = Pma::<PlainEntry>::with_geometry(16, 4);
        for k in [10, 20, 30, 40] {
            p.insert(pe(k));
        }
        // Pack the four keys into segment 0.
        p.occ = vec![0];
        for (i, k) in [10, 20, 30, 40].into_iter().enumerate() {
            p.cells[i] = pe(k);
            p.set_occ(i);
        }
        p.insert(pe(25));
        let r = p.last_rebalance().unwrap();
        assert!(r.on_insert && r.level >= 1);
        p.check().unwrap();
        let keys: Vec<u64> = p.layout().into_iter().flatten().collect();
        assert_eq!(keys, vec![10, 20, 25, 30, 40]);
    }

    #[test]
    fn grows_and_shrinks() {
        let mut p = Pma::<PlainEntry>::new(&NeighborConfig::default());
        for k in 0..1000 {
            p.insert(pe(k * 3));
            p.check().unwrap();
        }
        assert!(p.capacity() >= 1334);
        for k in 0..990 {
            p.remove(k * 3).unwrap();
            p.check().unwrap();
        }
        assert!(p.capacity() <= 64);
    }

    #[test]
    fn descending_inserts_stay_sorted() {
        let mut p = Pma::<PlainEntry>::new(&NeighborConfig::default());
        for k in (0..3000).rev() {
            p.insert(pe(k));
        }
        p.check().unwrap();
        assert_eq!(p.len(), 3000);
    }
}
