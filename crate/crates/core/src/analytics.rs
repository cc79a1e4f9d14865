//! Single-threaded query kernels over any [`GraphView`].

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use crate::types::VertexId;
use crate::view::GraphView;
use crate::{Error, Result};

/// Distance of a vertex the source cannot reach.
pub const UNREACHABLE: u64 = u64::MAX;

pub const DAMPING: f64 = 0.85;
pub const PR_ITERS: usize = 20;

/// Synchronous power iteration over vertices `[0, bound)` for a fixed
/// number of rounds. Rank held by vertices without out-edges is spread
/// uniformly. The result is normalized to sum to 1.
pub fn pagerank<V: GraphView>(view: &V, damping: f64, iters: usize) -> Vec<f64> {
    let n = view.vertex_bound() as usize;
    if n == 0 {
        return Vec::new();
    }
    let deg: Vec<usize> = (0..n as u64).map(|u| view.degree(u)).collect();
    let nf = n as f64;
    let mut rank = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    for _ in 0..iters {
        let dangling: f64 = (0..n).filter(|&u| deg[u] == 0).map(|u| rank[u]).sum();
        let base = (1.0 - damping) / nf + damping * dangling / nf;
        next.iter_mut().for_each(|x| *x = base);
        for u in 0..n {
            if deg[u] == 0 {
                continue;
            }
            let share = damping * rank[u] / deg[u] as f64;
            view.for_each_neighbor(u as u64, |v| next[v as usize] += share);
        }
        std::mem::swap(&mut rank, &mut next);
    }
    let sum: f64 = rank.iter().sum();
    rank.iter_mut().for_each(|x| *x /= sum);
    rank
}

fn check_source<V: GraphView>(view: &V, source: VertexId) -> Result<()> {
    if source < view.vertex_bound() && view.has_vertex(source) {
        Ok(())
    } else {
        Err(Error::VertexNotFound(source))
    }
}

/// Hop distances from `source`; [`UNREACHABLE`] for the rest.
pub fn bfs<V: GraphView>(view: &V, source: VertexId) -> Result<Vec<u64>> {
    check_source(view, source)?;
    let mut dist = vec![UNREACHABLE; view.vertex_bound() as usize];
    let mut queue = VecDeque::new();
    dist[source as usize] = 0;
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let d = dist[u as usize] + 1;
        view.for_each_neighbor(u, |v| {
            if dist[v as usize] == UNREACHABLE {
                dist[v as usize] = d;
                queue.push_back(v);
            }
        });
    }
    Ok(dist)
}

/// Dijkstra with a binary heap.
pub fn sssp<V: GraphView>(view: &V, source: VertexId) -> Result<Vec<u64>> {
    check_source(view, source)?;
    let mut dist = vec![UNREACHABLE; view.vertex_bound() as usize];
    let mut heap = BinaryHeap::new();
    dist[source as usize] = 0;
    heap.push(Reverse((0u64, source)));
    while let Some(Reverse((d, u))) = heap.pop() {
        if d > dist[u as usize] {
            continue;
        }
        view.for_each_weighted(u, |v, w| {
            let nd = d + w;
            if nd < dist[v as usize] {
                dist[v as usize] = nd;
                heap.push(Reverse((nd, v)));
            }
        });
    }
    Ok(dist)
}

/// Component labels ignoring edge direction: every vertex ends with the
/// smallest ID in its component. Label propagation to a fixpoint.
pub fn wcc<V: GraphView>(view: &V) -> Vec<VertexId> {
    let n = view.vertex_bound();
    let mut label: Vec<VertexId> = (0..n).collect();
    loop {
        let mut changed = false;
        for u in 0..n {
            view.for_each_neighbor(u, |v| {
                let (lu, lv) = (label[u as usize], label[v as usize]);
                if lu < lv {
                    label[v as usize] = lu;
                    changed = true;
                } else if lv < lu {
                    label[u as usize] = lv;
                    changed = true;
                }
            });
        }
        if !changed {
            return label;
        }
    }
}

/// Undirected triangles of a symmetric graph via sorted-merge
/// intersection, counting each `u < v < w` once. Needs sorted scans.
pub fn triangle_count<V: GraphView>(view: &V) -> Result<u64> {
    if !view.sorted() {
        return Err(Error::Unsupported("triangle counting"));
    }
    let n = view.vertex_bound();
    let mut count = 0u64;
    let mut nu = Vec::new();
    let mut nv = Vec::new();
    for u in 0..n {
        nu.clear();
        view.for_each_neighbor(u, |x| {
            if x > u {
                nu.push(x)
            }
        });
        for (i, &v) in nu.iter().enumerate() {
            nv.clear();
            view.for_each_neighbor(v, |x| {
                if x > v {
                    nv.push(x)
                }
            });
            count += intersect_count(&nu[i + 1..], &nv);
        }
    }
    Ok(count)
}

fn intersect_count(a: &[VertexId], b: &[VertexId]) -> u64 {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// Independent reference implementations working on plain edge lists.
pub mod reference {
    use std::collections::BTreeSet;

    use super::UNREACHABLE;
    use crate::types::VertexId;

    /// Dense transition-matrix power iteration.
    pub fn pagerank(n: usize, edges: &[(VertexId, VertexId)], d: f64, iters: usize) -> Vec<f64> {
        if n == 0 {
            return Vec::new();
        }
        let set: BTreeSet<(VertexId, VertexId)> = edges.iter().copied().collect();
        let mut out = vec![0usize; n];
        for &(u, _) in &set {
            out[u as usize] += 1;
        }
        // m[v][u]: probability of stepping u -> v.
        let mut m = vec![vec![0.0f64; n]; n];
        for u in 0..n {
            for v in 0..n {
                m[v][u] = if out[u] == 0 {
                    1.0 / n as f64
                } else if set.contains(&(u as u64, v as u64)) {
                    1.0 / out[u] as f64
                } else {
                    0.0
                };
            }
        }
        let mut r = vec![1.0 / n as f64; n];
        for _ in 0..iters {
            r = (0..n)
                .map(|v| {
                    let s: f64 = (0..n).map(|u| m[v][u] * r[u]).sum();
                    (1.0 - d) / n as f64 + d * s
                })
                .collect();
        }
        let sum: f64 = r.iter().sum();
        r.iter().map(|x| x / sum).collect()
    }

    fn adjacency(n: usize, edges: &[(VertexId, VertexId)]) -> Vec<Vec<VertexId>> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            adj[u as usize].push(v);
        }
        adj
    }

    pub fn bfs(n: usize, edges: &[(VertexId, VertexId)], s: VertexId) -> Vec<u64> {
        let adj = adjacency(n, edges);
        let mut dist = vec![UNREACHABLE; n];
        dist[s as usize] = 0;
        let mut frontier = vec![s];
        let mut level = 0;
        while !frontier.is_empty() {
            level += 1;
            let mut next = Vec::new();
            for u in frontier {
                for &v in &adj[u as usize] {
                    if dist[v as usize] == UNREACHABLE {
                        dist[v as usize] = level;
                        next.push(v);
                    }
                }
            }
            frontier = next;
        }
        dist
    }

    pub fn bellman_ford(n: usize, edges: &[(VertexId, VertexId, u64)], s: VertexId) -> Vec<u64> {
        let mut dist = vec![UNREACHABLE; n];
        dist[s as usize] = 0;
        for _ in 0..n {
            let mut changed = false;
            for &(u, v, w) in edges {
                let du = dist[u as usize];
                if du != UNREACHABLE && du + w < dist[v as usize] {
                    dist[v as usize] = du + w;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        dist
    }

    /// Union-find; labels are component minima.
    pub fn components(n: usize, edges: &[(VertexId, VertexId)]) -> Vec<VertexId> {
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut parent: Vec<usize> = (0..n).collect();
        for &(u, v) in edges {
            let (a, b) = (find(&mut parent, u as usize), find(&mut parent, v as usize));
            if a != b {
                // Smaller root wins so roots are component minima.
                let (lo, hi) = (a.min(b), a.max(b));
                parent[hi] = lo;
            }
        }
        (0..n).map(|x| find(&mut parent, x) as VertexId).collect()
    }

    /// Brute-force enumeration of `u < v < w` with all three undirected
    /// edges present.
    pub fn triangles(n: usize, edges: &[(VertexId, VertexId)]) -> u64 {
        let mut m = vec![vec![false; n]; n];
        for &(u, v) in edges {
            if u != v {
                m[u as usize][v as usize] = true;
                m[v as usize][u as usize] = true;
            }
        }
        let mut c = 0;
        for u in 0..n {
            for v in u + 1..n {
                if !m[u][v] {
                    continue;
                }
                for w in v + 1..n {
                    if m[u][w] && m[v][w] {
                        c += 1;
                    }
                }
            }
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csr::Csr;
    use crate::rng::SplitMix64;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9)
    }

    fn random_edges(n: u64, m: usize, seed: u64) -> Vec<(u64, u64)> {
        let mut r = SplitMix64::new(seed);
        (0..m).map(|_| (r.below(n), r.below(n))).collect()
    }

    #[test]
    fn pagerank_examples() {
        let two = Csr::build(2, &[(0, 1), (1, 0)]).unwrap();
        assert!(close(&pagerank(&two, DAMPING, PR_ITERS), &[0.5, 0.5]));
        let one = Csr::build(1, &[]).unwrap();
        assert!(close(&pagerank(&one, DAMPING, PR_ITERS), &[1.0]));
        let chain = [(0, 1), (1, 2)];
        let c = Csr::build(3, &chain).unwrap();
        let want = reference::pagerank(3, &chain, DAMPING, PR_ITERS);
        assert!(close(&pagerank(&c, DAMPING, PR_ITERS), &want));
        assert!(pagerank(&Csr::build(0, &[]).unwrap(), DAMPING, PR_ITERS).is_empty());
    }

    #[test]
    fn pagerank_random_matches_dense() {
        let e = random_edges(64, 300, 3);
        let c = Csr::build(64, &e).unwrap();
        let got = pagerank(&c, DAMPING, PR_ITERS);
        assert!(close(&got, &reference::pagerank(64, &e, DAMPING, PR_ITERS)));
        assert!((got.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bfs_examples() {
        let c = Csr::build(4, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(bfs(&c, 0).unwrap(), vec![0, 1, 2, UNREACHABLE]);
        assert!(matches!(bfs(&c, 9), Err(Error::VertexNotFound(9))));
        let e = random_edges(1 << 10, 1 << 13, 5);
        let c = Csr::build(1 << 10, &e).unwrap();
        assert_eq!(bfs(&c, 0).unwrap(), reference::bfs(1 << 10, &e, 0));
    }

    #[test]
    fn sssp_examples() {
        let c = Csr::build_weighted(3, &[(0, 1, 2), (1, 2, 3), (0, 2, 10)]).unwrap();
        let d = sssp(&c, 0).unwrap();
        assert_eq!(d, vec![0, 2, 5]);
        let e = random_edges(200, 1500, 8);
        let w: Vec<(u64, u64, u64)> = e
            .iter()
            .map(|&(u, v)| (u, v, crate::view::hash_weight(u, v)))
            .collect();
        let c = Csr::build(200, &e).unwrap();
        assert_eq!(sssp(&c, 7).unwrap(), reference::bellman_ford(200, &w, 7));
    }

    #[test]
    fn wcc_examples() {
        let c = Csr::build(3, &[(1, 0)]).unwrap();
        assert_eq!(wcc(&c), vec![0, 0, 2]);
        assert!(wcc(&Csr::build(0, &[]).unwrap()).is_empty());
        let e = random_edges(500, 400, 11);
        let c = Csr::build(500, &e).unwrap();
        assert_eq!(wcc(&c), reference::components(500, &e));
    }

    #[test]
    fn triangle_examples() {
        let sym = |e: &[(u64, u64)]| -> Vec<(u64, u64)> {
            e.iter().flat_map(|&(u, v)| [(u, v), (v, u)]).collect()
        };
        let k3 = Csr::from_edges(&sym(&[(0, 1), (1, 2), (0, 2)]));
        assert_eq!(triangle_count(&k3).unwrap(), 1);
        let mut k4 = Vec::new();
        for u in 0..4 {
            for v in u + 1..4 {
                k4.push((u, v));
            }
        }
        assert_eq!(triangle_count(&Csr::from_edges(&sym(&k4))).unwrap(), 4);
        let e = random_edges(64, 400, 2);
        let c = Csr::build(64, &sym(&e)).unwrap();
        assert_eq!(triangle_count(&c).unwrap(), reference::triangles(64, &e));
    }
}
