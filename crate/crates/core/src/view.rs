//! Read-only access shared by analytics kernels: the static baselines and
//! any read transaction implement it.

use crate::graph::ReadTxn;
use crate::types::VertexId;

/// Fallback SSSP weight when the input carries none.
#[inline]
pub fn hash_weight(u: VertexId, v: VertexId) -> u64 {
    ((u ^ v) % 255) + 1
}

pub trait GraphView {
    /// Vertex IDs are drawn from `[0, vertex_bound)`.
    fn vertex_bound(&self) -> u64;

    fn has_vertex(&self, u: VertexId) -> bool {
        u < self.vertex_bound()
    }

    /// Visit out-neighbors of `u`; returns the count.
    fn for_each_neighbor<F: FnMut(VertexId)>(&self, u: VertexId, f: F) -> usize;

    /// Whether neighbor scans are ascending.
    fn sorted(&self) -> bool;

    fn for_each_weighted<F: FnMut(VertexId, u64)>(&self, u: VertexId, mut f: F) -> usize {
        self.for_each_neighbor(u, |v| f(v, hash_weight(u, v)))
    }

    fn degree(&self, u: VertexId) -> usize {
        self.for_each_neighbor(u, |_| {})
    }

    fn neighbors(&self, u: VertexId) -> Vec<VertexId> {
        let mut v = Vec::new();
        self.for_each_neighbor(u, |x| v.push(x));
        v
    }
}

impl GraphView for ReadTxn<'_> {
    fn vertex_bound(&self) -> u64 {
        ReadTxn::vertex_bound(self)
    }

    fn has_vertex(&self, u: VertexId) -> bool {
        ReadTxn::has_vertex(self, u)
    }

    fn for_each_neighbor<F: FnMut(VertexId)>(&self, u: VertexId, f: F) -> usize {
        self.scan_neighbors(u, f)
    }

    fn sorted(&self) -> bool {
        self.graph().is_sorted()
    }
}

impl<V: GraphView + ?Sized> GraphView for &V {
    fn vertex_bound(&self) -> u64 {
        (**self).vertex_bound()
    }

    fn has_vertex(&self, u: VertexId) -> bool {
        (**self).has_vertex(u)
    }

    fn for_each_neighbor<F: FnMut(VertexId)>(&self, u: VertexId, f: F) -> usize {
        (**self).for_each_neighbor(u, f)
    }

    fn sorted(&self) -> bool {
        (**self).sorted()
    }

    fn for_each_weighted<F: FnMut(VertexId, u64)>(&self, u: VertexId, f: F) -> usize {
        (**self).for_each_weighted(u, f)
    }
}
