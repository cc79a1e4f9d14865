//! Vertex index: maps a vertex ID to its entry.
//!
//! Three designs: a dense array indexed by ID, an open-addressing hash table
//! and a persistent AVL tree. The concurrent table used by fine-grained
//! engines lives in [`crate::slots`].

use std::mem::size_of;

use crate::pavl;
use crate::probe::Probe;
use crate::types::VertexId;

pub trait VertexIndex<T> {
    /// Insert `value` for `u`; returns false (and changes nothing) if `u`
    /// is already present.
    fn insert(&mut self, u: VertexId, value: T) -> bool;

    fn search_probed<P: Probe>(&self, u: VertexId, probe: &mut P) -> Option<&T>;

    fn search(&self, u: VertexId) -> Option<&T> {
        self.search_probed(u, &mut ())
    }

    fn search_mut(&mut self, u: VertexId) -> Option<&mut T>;

    /// Visit every vertex; returns the count.
    fn scan<F: FnMut(VertexId, &T)>(&self, f: F) -> usize;

    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Bytes used by the index itself (excluding what `T` points to).
    fn memory_bytes(&self) -> usize;
}

/// `slots[u]` holds vertex `u`; holes are absent vertices. Grows by doubling.
#[derive(Clone, Debug)]
pub struct DenseArray<T> {
    slots: Vec<Option<T>>,
    len: usize,
}

impl<T> Default for DenseArray<T> {
    fn default() -> Self {
        DenseArray {
            slots: Vec::new(),
            len: 0,
        }
    }
}

impl<T> DenseArray<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }
}

impl<T> VertexIndex<T> for DenseArray<T> {
    fn insert(&mut self, u: VertexId, value: T) -> bool {
        let u = u as usize;
        if u >= self.slots.len() {
            let want = (self.slots.len() * 2).max(u + 1).max(4);
            self.slots.resize_with(want, || None);
        }
        if self.slots[u].is_some() {
            return false;
        }
        self.slots[u] = Some(value);
        self.len += 1;
        true
    }

    #[inline]
    fn search_probed<P: Probe>(&self, u: VertexId, probe: &mut P) -> Option<&T> {
        probe.visit();
        self.slots.get(u as usize)?.as_ref()
    }

    fn search_mut(&mut self, u: VertexId) -> Option<&mut T> {
        self.slots.get_mut(u as usize)?.as_mut()
    }

    fn scan<F: FnMut(VertexId, &T)>(&self, mut f: F) -> usize {
        let mut n = 0;
        for (u, s) in self.slots.iter().enumerate() {
            if let Some(v) = s {
                f(u as VertexId, v);
                n += 1;
            }
        }
        n
    }

    fn len(&self) -> usize {
        self.len
    }

    fn memory_bytes(&self) -> usize {
        self.slots.capacity() * size_of::<Option<T>>()
    }
}

const EMPTY: u64 = u64::MAX;
const MAX_LOAD: f64 = 0.7;

/// Open addressing with linear probing; power-of-two capacity, resized when
/// the load factor would exceed 0.7.
#[derive(Clone, Debug)]
pub struct OpenHashIndex<T> {
    keys: Vec<u64>,
    values: Vec<Option<T>>,
    len: usize,
}

impl<T> Default for OpenHashIndex<T> {
    fn default() -> Self {
        Self::with_capacity(8)
    }
}

impl<T> OpenHashIndex<T> {
    pub fn with_capacity(cap: usize) -> Self {
        let cap = cap.next_power_of_two().max(8);
        OpenHashIndex {
            keys: vec![EMPTY; cap],
            values: (0..cap).map(|_| None).collect(),
            len: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.keys.len()
    }

    #[inline]
    fn home(&self, u: u64) -> usize {
        let shift = 64 - self.keys.len().trailing_zeros();
        (u.wrapping_mul(0x9E37_79B9_7F4A_7C15) >> shift) as usize
    }

    fn slot_of<P: Probe>(&self, u: u64, probe: &mut P) -> Result<usize, usize> {
        let mask = self.keys.len() - 1;
        let mut i = self.home(u);
        loop {
            probe.compare();
            match self.keys[i] {
                k if k == u => return Ok(i),
                EMPTY => return Err(i),
                _ => i = (i + 1) & mask,
            }
        }
    }

    fn grow(&mut self) {
        let old_keys = std::mem::take(&mut self.keys);
        let old_vals = std::mem::take(&mut self.values);
        let cap = old_keys.len() * 2;
        self.keys = vec![EMPTY; cap];
        self.values = (0..cap).map(|_| None).collect();
        for (k, v) in old_keys.into_iter().zip(old_vals) {
            if k != EMPTY {
                let i = self.slot_of(k, &mut ()).expect_err("unique");
                self.keys[i] = k;
                self.values[i] = v;
            }
        }
    }
}

impl<T> VertexIndex<T> for OpenHashIndex<T> {
    fn insert(&mut self, u: VertexId, value: T) -> bool {
        assert_ne!(u, EMPTY, "vertex id reserved");
        if self.slot_of(u, &mut ()).is_ok() {
            return false;
        }
        if (self.len + 1) as f64 > MAX_LOAD * self.keys.len() as f64 {
            self.grow();
        }
        let i = self.slot_of(u, &mut ()).expect_err("absent");
        self.keys[i] = u;
        self.values[i] = Some(value);
        self.len += 1;
        true
    }

    fn search_probed<P: Probe>(&self, u: VertexId, probe: &mut P) -> Option<&T> {
        let i = self.slot_of(u, probe).ok()?;
        self.values[i].as_ref()
    }

    fn search_mut(&mut self, u: VertexId) -> Option<&mut T> {
        let i = self.slot_of(u, &mut ()).ok()?;
        self.values[i].as_mut()
    }

    fn scan<F: FnMut(VertexId, &T)>(&self, mut f: F) -> usize {
        let mut n = 0;
        for (k, v) in self.keys.iter().zip(&self.values) {
            if let Some(v) = v {
                f(*k, v);
                n += 1;
            }
        }
        n
    }

    fn len(&self) -> usize {
        self.len
    }

    fn memory_bytes(&self) -> usize {
        self.keys.len() * (size_of::<u64>() + size_of::<Option<T>>())
    }
}

/// Persistent AVL tree; `scan` is in ascending ID order.
#[derive(Clone, Debug)]
pub struct AvlIndex<T> {
    map: pavl::Map<T>,
}

impl<T> Default for AvlIndex<T> {
    fn default() -> Self {
        AvlIndex {
            map: pavl::Map::new(),
        }
    }
}

impl<T: Clone> AvlIndex<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn height(&self) -> usize {
        self.map.height()
    }
}

impl<T: Clone> VertexIndex<T> for AvlIndex<T> {
    fn insert(&mut self, u: VertexId, value: T) -> bool {
        if self.map.contains_key(u) {
            return false;
        }
        self.map.insert(u, value);
        true
    }

    fn search_probed<P: Probe>(&self, u: VertexId, probe: &mut P) -> Option<&T> {
        self.map.get_probed(u, probe)
    }

    fn search_mut(&mut self, u: VertexId) -> Option<&mut T> {
        self.map.get_mut(u)
    }

    fn scan<F: FnMut(VertexId, &T)>(&self, mut f: F) -> usize {
        let mut n = 0;
        for (k, v) in self.map.iter() {
            f(k, v);
            n += 1;
        }
        n
    }

    fn len(&self) -> usize {
        self.map.len()
    }

    fn memory_bytes(&self) -> usize {
        self.map.len() * pavl::node_bytes::<T>()
    }
}
