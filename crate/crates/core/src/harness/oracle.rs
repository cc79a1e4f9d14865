//! Brute-force reference model rebuilt from the committed-operation log.

use std::collections::BTreeMap;
use std::fmt;

use crate::types::{EdgeOp, Timestamp, VertexId};
use crate::view::GraphView;
use crate::{Error, Result};

/// `u -> v -> [(commit ts, present after that commit)]`.
#[derive(Clone, Debug, Default)]
pub struct ReferenceModel {
    adj: BTreeMap<VertexId, BTreeMap<VertexId, Vec<(u64, bool)>>>,
    last_ts: u64,
}

impl ReferenceModel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Edges present from `t = 0`.
    pub fn with_initial(edges: &[(VertexId, VertexId)]) -> Self {
        let mut m = Self::new();
        for &(u, v) in edges {
            m.set(0, u, v, true);
        }
        m
    }

    /// Rebuild from commits in any order. Timestamps must be exactly
    /// `last + 1, last + 2, ...` once sorted.
    pub fn replay(&mut self, mut log: Vec<(Timestamp, Vec<EdgeOp>)>) -> Result<()> {
        log.sort_by_key(|e| e.0);
        for (ts, ops) in log {
            self.apply(ts, &ops)?;
        }
        Ok(())
    }

    /// Apply the next commit.
    pub fn apply(&mut self, ts: Timestamp, ops: &[EdgeOp]) -> Result<()> {
        if ts.0 != self.last_ts + 1 {
            return Err(Error::InvalidArgument(format!(
                "commit {} does not follow {}",
                ts, self.last_ts
            )));
        }
        self.last_ts = ts.0;
        for op in ops {
            self.set(ts.0, op.source(), op.target(), op.is_insert());
        }
        Ok(())
    }

    fn set(&mut self, ts: u64, u: VertexId, v: VertexId, present: bool) {
        let h = self.adj.entry(u).or_default().entry(v).or_default();
        match h.last_mut() {
            Some(last) if last.0 == ts => last.1 = present,
            _ => h.push((ts, present)),
        }
    }

    pub fn last_ts(&self) -> Timestamp {
        Timestamp(self.last_ts)
    }

    pub fn present_at(&self, u: VertexId, v: VertexId, t: Timestamp) -> bool {
        self.adj
            .get(&u)
            .and_then(|m| m.get(&v))
            .and_then(|h| h.iter().rev().find(|e| e.0 <= t.0))
            .is_some_and(|e| e.1)
    }

    /// Ascending neighbors of `u` visible at `t`.
    pub fn neighbors_at(&self, u: VertexId, t: Timestamp) -> Vec<VertexId> {
        let Some(m) = self.adj.get(&u) else {
            return Vec::new();
        };
        m.iter()
            .filter(|(_, h)| h.iter().rev().find(|e| e.0 <= t.0).is_some_and(|e| e.1))
            .map(|(&v, _)| v)
            .collect()
    }

    pub fn edges_at(&self, t: Timestamp) -> Vec<(VertexId, VertexId)> {
        self.adj
            .keys()
            .flat_map(|&u| self.neighbors_at(u, t).into_iter().map(move |v| (u, v)))
            .collect()
    }

    /// Sources that ever had an out-edge.
    pub fn sources(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.adj.keys().copied()
    }
}

/// First vertex whose scan disagrees with the model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Divergence {
    pub vertex: VertexId,
    pub at: Timestamp,
    pub expected: Vec<VertexId>,
    pub got: Vec<VertexId>,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "vertex {} at t={}: expected {:?}, got {:?}",
            self.vertex, self.at, self.expected, self.got
        )
    }
}

impl std::error::Error for Divergence {}

/// Full scan of every vertex of `view` (taken at `at`) against the model.
/// Sorted views must also return neighbors in ascending order; unsorted
/// ones are compared as sets.
pub fn oracle_check<V: GraphView>(
    view: &V,
    model: &ReferenceModel,
    at: Timestamp,
) -> std::result::Result<(), Divergence> {
    let bound = view.vertex_bound();
    let mut ids: Vec<VertexId> = (0..bound).collect();
    ids.extend(model.sources().filter(|&u| u >= bound));
    let mut got = Vec::new();
    for u in ids {
        got.clear();
        view.for_each_neighbor(u, |v| got.push(v));
        if !view.sorted() {
            got.sort_unstable();
        }
        let expected = model.neighbors_at(u, at);
        if got != expected {
            return Err(Divergence {
                vertex: u,
                at,
                expected,
                got: got.clone(),
            });
        }
    }
    Ok(())
}
