//! Static baselines: CSR and a per-vertex sorted adjacency list.

use serde::Serialize;

use crate::neighbor::WORD_BYTES;
use crate::types::VertexId;
use crate::view::GraphView;
use crate::{Error, Result};

/// Compressed sparse row: `neighbors[offsets[u]..offsets[u + 1]]` is the
/// ascending, duplicate-free neighbor list of `u`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Csr {
    offsets: Vec<u64>,
    neighbors: Vec<VertexId>,
    weights: Option<Vec<u64>>,
}

impl Csr {
    /// Build over `num_vertices` vertices. Duplicate edges are stored once.
    pub fn build(num_vertices: u64, edges: &[(VertexId, VertexId)]) -> Result<Csr> {
        let triples: Vec<(VertexId, VertexId, u64)> =
            edges.iter().map(|&(u, v)| (u, v, 0)).collect();
        let mut c = Self::build_inner(num_vertices, triples)?;
        c.weights = None;
        Ok(c)
    }

    /// As [`Csr::build`], keeping a weight per edge. For duplicate edges the
    /// smallest weight wins.
    pub fn build_weighted(num_vertices: u64, edges: &[(VertexId, VertexId, u64)]) -> Result<Csr> {
        Self::build_inner(num_vertices, edges.to_vec())
    }

    /// `num_vertices` is one past the largest endpoint.
    pub fn from_edges(edges: &[(VertexId, VertexId)]) -> Csr {
        let n = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
        Self::build(n, edges).expect("bound covers every endpoint")
    }

    fn build_inner(n: u64, mut edges: Vec<(VertexId, VertexId, u64)>) -> Result<Csr> {
        if let Some(&(u, v, _)) = edges.iter().find(|&&(u, v, _)| u >= n || v >= n) {
            return Err(Error::InvalidArgument(format!(
                "edge ({u}, {v}) outside [0, {n})"
            )));
        }
        edges.sort_unstable();
        edges.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
        let mut offsets = vec![0u64; n as usize + 1];
        for &(u, _, _) in &edges {
            offsets[u as usize + 1] += 1;
        }
        for i in 1..offsets.len() {
            offsets[i] += offsets[i - 1];
        }
        Ok(Csr {
            offsets,
            neighbors: edges.iter().map(|e| e.1).collect(),
            weights: Some(edges.iter().map(|e| e.2).collect()),
        })
    }

    pub fn num_vertices(&self) -> u64 {
        self.offsets.len() as u64 - 1
    }

    pub fn num_edges(&self) -> u64 {
        self.neighbors.len() as u64
    }

    pub fn offsets(&self) -> &[u64] {
        &self.offsets
    }

    pub fn neighbor_array(&self) -> &[VertexId] {
        &self.neighbors
    }

    #[inline]
    pub fn neighbors_of(&self, u: VertexId) -> &[VertexId] {
        let (a, b) = (self.offsets[u as usize], self.offsets[u as usize + 1]);
        &self.neighbors[a as usize..b as usize]
    }

    pub fn contains_edge(&self, u: VertexId, v: VertexId) -> bool {
        u < self.num_vertices() && self.neighbors_of(u).binary_search(&v).is_ok()
    }

    /// `|V| + 1 + |E|` words, plus `|E|` with weights.
    pub fn memory_words(&self) -> usize {
        self.offsets.len() + self.neighbors.len() + self.weights.as_ref().map_or(0, Vec::len)
    }

    pub fn memory_bytes(&self) -> usize {
        self.memory_words() * WORD_BYTES
    }

    pub fn check(&self) -> std::result::Result<(), String> {
        if self.offsets.first() != Some(&0) {
            return Err("offsets[0] != 0".into());
        }
        if self.offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err("offsets not monotone".into());
        }
        if *self.offsets.last().unwrap() != self.neighbors.len() as u64 {
            return Err("offsets[|V|] != |E|".into());
        }
        for u in 0..self.num_vertices() {
            if self.neighbors_of(u).windows(2).any(|w| w[0] >= w[1]) {
                return Err(format!("neighbors of {u} not strictly ascending"));
            }
        }
        Ok(())
    }
}

impl GraphView for Csr {
    fn vertex_bound(&self) -> u64 {
        self.num_vertices()
    }

    #[inline]
    fn for_each_neighbor<F: FnMut(VertexId)>(&self, u: VertexId, mut f: F) -> usize {
        if u >= self.num_vertices() {
            return 0;
        }
        let ns = self.neighbors_of(u);
        for &v in ns {
            f(v);
        }
        ns.len()
    }

    fn sorted(&self) -> bool {
        true
    }

    fn for_each_weighted<F: FnMut(VertexId, u64)>(&self, u: VertexId, mut f: F) -> usize {
        if u >= self.num_vertices() {
            return 0;
        }
        let (a, b) = (self.offsets[u as usize] as usize, self.offsets[u as usize + 1] as usize);
        match &self.weights {
            Some(w) => {
                for i in a..b {
                    f(self.neighbors[i], w[i]);
                }
            }
            None => {
                for &v in &self.neighbors[a..b] {
                    f(v, crate::view::hash_weight(u, v));
                }
            }
        }
        b - a
    }
}

/// Static adjacency list: one sorted array per vertex, filled by binary
/// search insertion.
#[derive(Clone, Debug, Default)]
pub struct AdjList {
    lists: Vec<Vec<VertexId>>,
}

impl AdjList {
    pub fn build(num_vertices: u64, edges: &[(VertexId, VertexId)]) -> Result<AdjList> {
        let mut lists = vec![Vec::new(); num_vertices as usize];
        for &(u, v) in edges {
            if u >= num_vertices || v >= num_vertices {
                return Err(Error::InvalidArgument(format!(
                    "edge ({u}, {v}) outside [0, {num_vertices})"
                )));
            }
            let l: &mut Vec<VertexId> = &mut lists[u as usize];
            if let Err(i) = l.binary_search(&v) {
                l.insert(i, v);
            }
        }
        Ok(AdjList { lists })
    }

    pub fn neighbors_of(&self, u: VertexId) -> &[VertexId] {
        &self.lists[u as usize]
    }

    /// Element words plus one length word per vertex.
    pub fn memory_bytes(&self) -> usize {
        self.lists
            .iter()
            .map(|l| (l.capacity() + 3) * WORD_BYTES)
            .sum()
    }
}

impl GraphView for AdjList {
    fn vertex_bound(&self) -> u64 {
        self.lists.len() as u64
    }

    fn for_each_neighbor<F: FnMut(VertexId)>(&self, u: VertexId, mut f: F) -> usize {
        match self.lists.get(u as usize) {
            Some(l) => {
                for &v in l {
                    f(v);
                }
                l.len()
            }
            None => 0,
        }
    }

    fn sorted(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_examples() {
        let c = Csr::build(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
        assert_eq!(c.offsets(), &[0, 2, 3, 3]);
        assert_eq!(c.neighbor_array(), &[1, 2, 2]);
        c.check().unwrap();

        let c = Csr::build(2, &[]).unwrap();
        assert_eq!(c.offsets(), &[0, 0, 0]);
        assert!(c.neighbor_array().is_empty());

        let c = Csr::build(2, &[(0, 1), (0, 1)]).unwrap();
        assert_eq!(c.neighbor_array(), &[1]);
        assert!(Csr::build(2, &[(0, 2)]).is_err());
    }

    #[test]
    fn memory_formula() {
        let c = Csr::build(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        assert_eq!(c.memory_words(), 4 + 3);
        let w = Csr::build_weighted(3, &[(0, 1, 5), (1, 2, 1), (2, 0, 1)]).unwrap();
        assert_eq!(w.memory_words(), 4 + 3 + 3);
    }

    #[test]
    fn weighted_duplicates_keep_smallest() {
        let w = Csr::build_weighted(2, &[(0, 1, 9), (0, 1, 4)]).unwrap();
        let mut got = Vec::new();
        w.for_each_weighted(0, |v, x| got.push((v, x)));
        assert_eq!(got, vec![(1, 4)]);
    }

    #[test]
    fn adjacency_list_matches_csr() {
        let edges = [(2, 1), (0, 2), (2, 0), (0, 1), (0, 2)];
        let a = AdjList::build(3, &edges).unwrap();
        let c = Csr::build(3, &edges).unwrap();
        for u in 0..3 {
            assert_eq!(a.neighbors_of(u), c.neighbors_of(u));
        }
    }
}
