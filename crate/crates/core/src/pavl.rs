//! Persistent AVL map keyed by `u64`.
//!
//! Nodes live behind `Arc`; every mutation goes through `Arc::make_mut`, so
//! an update copies exactly the nodes on its root-to-leaf path that are still
//! shared with another version and mutates uniquely owned nodes in place.
//! Cloning a map is O(1).

use std::cmp::Ordering;
use std::sync::Arc;

use crate::probe::Probe;

type Link<V> = Option<Arc<Node<V>>>;

#[derive(Clone, Debug)]
struct Node<V> {
    key: u64,
    value: V,
    height: u8,
    left: Link<V>,
    right: Link<V>,
}

impl<V> Node<V> {
    fn leaf(key: u64, value: V) -> Self {
        Node {
            key,
            value,
            height: 1,
            left: None,
            right: None,
        }
    }

    fn fix_height(&mut self) {
        self.height = 1 + height(&self.left).max(height(&self.right));
    }

    fn balance(&self) -> i32 {
        height(&self.left) as i32 - height(&self.right) as i32
    }
}

#[inline]
fn height<V>(l: &Link<V>) -> u8 {
    l.as_ref().map_or(0, |n| n.height)
}

/// Heap bytes of one node holding a `V`, including the `Arc` counters.
pub fn node_bytes<V>() -> usize {
    std::mem::size_of::<Node<V>>() + 2 * std::mem::size_of::<usize>()
}

#[derive(Clone, Debug)]
pub struct Map<V> {
    root: Link<V>,
    len: usize,
}

impl<V> Default for Map<V> {
    fn default() -> Self {
        Map { root: None, len: 0 }
    }
}

impl<V> Map<V> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn height(&self) -> usize {
        height(&self.root) as usize
    }

    pub fn get(&self, key: u64) -> Option<&V> {
        self.get_probed(key, &mut ())
    }

    pub fn get_probed<P: Probe>(&self, key: u64, probe: &mut P) -> Option<&V> {
        let mut cur = self.root.as_deref();
        while let Some(n) = cur {
            probe.compare();
            cur = match key.cmp(&n.key) {
                Ordering::Less => n.left.as_deref(),
                Ordering::Greater => n.right.as_deref(),
                Ordering::Equal => return Some(&n.value),
            };
        }
        None
    }

    pub fn contains_key(&self, key: u64) -> bool {
        self.get(key).is_some()
    }

    /// Entry with the largest key `<= key`.
    pub fn floor(&self, key: u64) -> Option<(u64, &V)> {
        let mut cur = self.root.as_deref();
        let mut best = None;
        while let Some(n) = cur {
            match key.cmp(&n.key) {
                Ordering::Less => cur = n.left.as_deref(),
                Ordering::Equal => return Some((n.key, &n.value)),
                Ordering::Greater => {
                    best = Some((n.key, &n.value));
                    cur = n.right.as_deref();
                }
            }
        }
        best
    }

    /// Entry with the smallest key `> key`.
    pub fn successor(&self, key: u64) -> Option<(u64, &V)> {
        let mut cur = self.root.as_deref();
        let mut best = None;
        while let Some(n) = cur {
            if n.key > key {
                best = Some((n.key, &n.value));
                cur = n.left.as_deref();
            } else {
                cur = n.right.as_deref();
            }
        }
        best
    }

    pub fn first(&self) -> Option<(u64, &V)> {
        let mut cur = self.root.as_deref()?;
        while let Some(l) = cur.left.as_deref() {
            cur = l;
        }
        Some((cur.key, &cur.value))
    }

    pub fn iter(&self) -> Iter<'_, V> {
        let mut it = Iter { stack: Vec::new() };
        it.push_left(self.root.as_deref());
        it
    }

    pub fn values(&self) -> impl Iterator<Item = &V> {
        self.iter().map(|(_, v)| v)
    }

    pub fn keys(&self) -> impl Iterator<Item = u64> + '_ {
        self.iter().map(|(k, _)| k)
    }

    /// Number of nodes not shared with `other` (reachable only from `self`).
    pub fn unshared_nodes(&self, other: &Map<V>) -> usize {
        let mut theirs = std::collections::HashSet::new();
        collect_ptrs(&other.root, &mut theirs);
        let mut mine = std::collections::HashSet::new();
        collect_ptrs(&self.root, &mut mine);
        mine.difference(&theirs).count()
    }
}

fn collect_ptrs<V>(l: &Link<V>, out: &mut std::collections::HashSet<usize>) {
    if let Some(n) = l {
        if out.insert(Arc::as_ptr(n) as usize) {
            collect_ptrs(&n.left, out);
            collect_ptrs(&n.right, out);
        }
    }
}

impl<V: Clone> Map<V> {
    /// Insert or replace; returns the previous value.
    pub fn insert(&mut self, key: u64, value: V) -> Option<V> {
        let old = insert_rec(&mut self.root, key, value);
        if old.is_none() {
            self.len += 1;
        }
        old
    }

    pub fn remove(&mut self, key: u64) -> Option<V> {
        let old = remove_rec(&mut self.root, key);
        if old.is_some() {
            self.len -= 1;
        }
        old
    }

    /// Mutable access, copying shared nodes along the path.
    pub fn get_mut(&mut self, key: u64) -> Option<&mut V> {
        let mut cur = &mut self.root;
        loop {
            let n = Arc::make_mut(cur.as_mut()?);
            match key.cmp(&n.key) {
                Ordering::Less => cur = &mut n.left,
                Ordering::Greater => cur = &mut n.right,
                Ordering::Equal => return Some(&mut n.value),
            }
        }
    }

    /// Mutable access to the entry with the largest key `<= key`.
    pub fn floor_mut(&mut self, key: u64) -> Option<(u64, &mut V)> {
        let k = self.floor(key)?.0;
        self.get_mut(k).map(|v| (k, v))
    }

    /// Insert `make()` when `key` is absent; either way return the value.
    pub fn get_or_insert_with(&mut self, key: u64, make: impl FnOnce() -> V) -> &mut V {
        if !self.contains_key(key) {
            self.insert(key, make());
        }
        self.get_mut(key).expect("just inserted")
    }

    /// Visit every value mutably in key order, copying shared nodes.
    pub fn for_each_mut(&mut self, mut f: impl FnMut(u64, &mut V)) {
        fn walk<V: Clone>(l: &mut Link<V>, f: &mut impl FnMut(u64, &mut V)) {
            if let Some(arc) = l {
                let n = Arc::make_mut(arc);
                walk(&mut n.left, f);
                f(n.key, &mut n.value);
                walk(&mut n.right, f);
            }
        }
        walk(&mut self.root, &mut f);
    }

    /// Build from strictly ascending pairs in O(n).
    pub fn from_sorted(pairs: Vec<(u64, V)>) -> Self {
        fn build<V>(items: &mut std::vec::IntoIter<(u64, V)>, n: usize) -> Link<V> {
            if n == 0 {
                return None;
            }
            let left_n = n / 2;
            let left = build(items, left_n);
            let (key, value) = items.next().expect("counted");
            let right = build(items, n - left_n - 1);
            let mut node = Node {
                key,
                value,
                height: 1,
                left,
                right,
            };
            node.fix_height();
            Some(Arc::new(node))
        }
        debug_assert!(pairs.windows(2).all(|w| w[0].0 < w[1].0));
        let len = pairs.len();
        let mut it = pairs.into_iter();
        Map {
            root: build(&mut it, len),
            len,
        }
    }

    /// AVL and ordering invariants.
    pub fn check(&self) -> Result<(), String> {
        fn walk<V>(l: &Link<V>, lo: Option<u64>, hi: Option<u64>) -> Result<(u8, usize), String> {
            let Some(n) = l else { return Ok((0, 0)) };
            if lo.is_some_and(|lo| n.key <= lo) || hi.is_some_and(|hi| n.key >= hi) {
                return Err(format!("key {} out of order", n.key));
            }
            let (hl, cl) = walk(&n.left, lo, Some(n.key))?;
            let (hr, cr) = walk(&n.right, Some(n.key), hi)?;
            if (hl as i32 - hr as i32).abs() > 1 {
                return Err(format!("node {} unbalanced", n.key));
            }
            let h = 1 + hl.max(hr);
            if h != n.height {
                return Err(format!("node {} height {} != {}", n.key, n.height, h));
            }
            Ok((h, cl + cr + 1))
        }
        let (_, count) = walk(&self.root, None, None)?;
        if count != self.len {
            return Err(format!("len {} but {} nodes", self.len, count));
        }
        Ok(())
    }
}

fn insert_rec<V: Clone>(link: &mut Link<V>, key: u64, value: V) -> Option<V> {
    let Some(arc) = link else {
        *link = Some(Arc::new(Node::leaf(key, value)));
        return None;
    };
    let n = Arc::make_mut(arc);
    let old = match key.cmp(&n.key) {
        Ordering::Less => insert_rec(&mut n.left, key, value),
        Ordering::Greater => insert_rec(&mut n.right, key, value),
        Ordering::Equal => return Some(std::mem::replace(&mut n.value, value)),
    };
    rebalance(link);
    old
}

fn remove_rec<V: Clone>(link: &mut Link<V>, key: u64) -> Option<V> {
    let arc = link.as_mut()?;
    let n = Arc::make_mut(arc);
    let old = match key.cmp(&n.key) {
        Ordering::Less => remove_rec(&mut n.left, key),
        Ordering::Greater => remove_rec(&mut n.right, key),
        Ordering::Equal => {
            let old = match (n.left.take(), n.right.take()) {
                (None, None) => {
                    let node = link.take().expect("present");
                    return Some(unwrap_value(node));
                }
                (Some(l), None) => {
                    let node = std::mem::replace(link, Some(l)).expect("present");
                    return Some(unwrap_value(node));
                }
                (None, Some(r)) => {
                    let node = std::mem::replace(link, Some(r)).expect("present");
                    return Some(unwrap_value(node));
                }
                (Some(l), Some(r)) => {
                    let mut right = Some(r);
                    let (k, v) = remove_min(&mut right);
                    n.left = Some(l);
                    n.right = right;
                    n.key = k;
                    std::mem::replace(&mut n.value, v)
                }
            };
            Some(old)
        }
    };
    if old.is_some() {
        rebalance(link);
    }
    old
}

fn remove_min<V: Clone>(link: &mut Link<V>) -> (u64, V) {
    let n = Arc::make_mut(link.as_mut().expect("non-empty"));
    if n.left.is_some() {
        let out = remove_min(&mut n.left);
        rebalance(link);
        out
    } else {
        let right = n.right.take();
        let node = std::mem::replace(link, right).expect("present");
        let key = node.key;
        (key, unwrap_value(node))
    }
}

fn unwrap_value<V: Clone>(node: Arc<Node<V>>) -> V {
    match Arc::try_unwrap(node) {
        Ok(n) => n.value,
        Err(shared) => shared.value.clone(),
    }
}

fn rebalance<V: Clone>(link: &mut Link<V>) {
    let Some(arc) = link else { return };
    let n = Arc::make_mut(arc);
    n.fix_height();
    let bal = n.balance();
    if bal > 1 {
        if n.left.as_ref().map_or(0, |l| l.balance()) < 0 {
            rotate_left(&mut n.left);
        }
        rotate_right(link);
    } else if bal < -1 {
        if n.right.as_ref().map_or(0, |r| r.balance()) > 0 {
            rotate_right(&mut n.right);
        }
        rotate_left(link);
    }
}

fn rotate_right<V: Clone>(link: &mut Link<V>) {
    let mut top = link.take().expect("rotate on empty");
    let mut pivot = {
        let t = Arc::make_mut(&mut top);
        let mut pivot = t.left.take().expect("left child");
        t.left = Arc::make_mut(&mut pivot).right.take();
        t.fix_height();
        pivot
    };
    {
        let p = Arc::make_mut(&mut pivot);
        p.right = Some(top);
        p.fix_height();
    }
    *link = Some(pivot);
}

fn rotate_left<V: Clone>(link: &mut Link<V>) {
    let mut top = link.take().expect("rotate on empty");
    let mut pivot = {
        let t = Arc::make_mut(&mut top);
        let mut pivot = t.right.take().expect("right child");
        t.right = Arc::make_mut(&mut pivot).left.take();
        t.fix_height();
        pivot
    };
    {
        let p = Arc::make_mut(&mut pivot);
        p.left = Some(top);
        p.fix_height();
    }
    *link = Some(pivot);
}

pub struct Iter<'a, V> {
    stack: Vec<&'a Node<V>>,
}

impl<'a, V> Iter<'a, V> {
    fn push_left(&mut self, mut cur: Option<&'a Node<V>>) {
        while let Some(n) = cur {
            self.stack.push(n);
            cur = n.left.as_deref();
        }
    }
}

impl<'a, V> Iterator for Iter<'a, V> {
    type Item = (u64, &'a V);

    fn next(&mut self) -> Option<Self::Item> {
        let n = self.stack.pop()?;
        self.push_left(n.right.as_deref());
        Some((n.key, &n.value))
    }
}
