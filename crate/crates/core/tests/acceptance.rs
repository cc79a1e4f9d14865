//! Acceptance checks, one line per criterion. Run with `cargo test --test acceptance`.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::Hasher;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc};
use std::time::{Duration, Instant};

use dgs_core::analytics::{self, reference};
use dgs_core::bloom::BloomFilter;
use dgs_core::csr::Csr;
use dgs_core::harness::executor::run_on;
use dgs_core::harness::{
    cost_breakdown, oracle_check, run_benchmark, BenchConfig, ClassMetrics, OpClass, ReferenceModel,
};
use dgs_core::neighbor::cow::CowSet;
use dgs_core::neighbor::pma::Pma;
use dgs_core::neighbor::skiplist::SegmentedSkipList;
use dgs_core::neighbor::sorted::SortedArray;
use dgs_core::neighbor::unsorted::UnsortedArray;
use dgs_core::neighbor::{NeighborConfig, NeighborIndex, PlainEntry};
use dgs_core::probe::OpCounts;
use dgs_core::rng::SplitMix64;
use dgs_core::types::{CcMode, ContainerKind, EdgeOp, Timestamp, VertexId, VertexIndexKind};
use dgs_core::view::{hash_weight, GraphView};
use dgs_core::workload::{self, EdgeList, ScanSelection, WorkloadSpec};
use dgs_core::{Error, Graph, GraphConfig};

type Check = Result<String, String>;

fn combos() -> Vec<(ContainerKind, CcMode)> {
    let mut v = Vec::new();
    for cc in [CcMode::Fine, CcMode::Off] {
        for c in ContainerKind::ALL {
            v.push((c, cc));
        }
    }
    v.push((ContainerKind::Cow, CcMode::Coarse));
    v
}

fn graph(c: ContainerKind, cc: CcMode) -> Graph {
    Graph::new(GraphConfig::new(c, cc)).expect("valid config")
}

fn err<E: std::fmt::Display>(ctx: impl std::fmt::Display) -> impl FnOnce(E) -> String {
    move |e| format!("{ctx}: {e}")
}

/// Fastest of `reps` runs.
fn best_of(reps: usize, mut f: impl FnMut()) -> Duration {
    (0..reps)
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed()
        })
        .min()
        .unwrap()
}

/// Recursive-matrix edges: skewed degrees like real graphs.
fn rmat(scale: u32, m: usize, seed: u64) -> Vec<(VertexId, VertexId)> {
    let mut rng = SplitMix64::new(seed);
    (0..m)
        .map(|_| {
            let (mut u, mut v) = (0u64, 0u64);
            for _ in 0..scale {
                let r = rng.next_f64();
                let (a, b) = if r < 0.57 {
                    (0, 0)
                } else if r < 0.76 {
                    (0, 1)
                } else if r < 0.95 {
                    (1, 0)
                } else {
                    (1, 1)
                };
                u = u * 2 + a;
                v = v * 2 + b;
            }
            (u, v)
        })
        .collect()
}

fn scan_digest<V: GraphView>(view: &V, bound: u64) -> Vec<u8> {
    let mut bytes = Vec::new();
    let mut n = Vec::new();
    for u in 0..bound {
        n.clear();
        view.for_each_neighbor(u, |v| n.push(v));
        if !view.sorted() {
            n.sort_unstable();
        }
        bytes.extend_from_slice(&u.to_le_bytes());
        bytes.extend_from_slice(&(n.len() as u64).to_le_bytes());
        for v in &n {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    bytes
}

fn hash_bytes(b: &[u8]) -> u64 {
    let mut h = DefaultHasher::new();
    h.write(b);
    h.finish()
}

fn model_digest(model: &ReferenceModel, bound: u64, at: Timestamp) -> Vec<u8> {
    let mut bytes = Vec::new();
    for u in 0..bound {
        let n = model.neighbors_at(u, at);
        bytes.extend_from_slice(&u.to_le_bytes());
        bytes.extend_from_slice(&(n.len() as u64).to_le_bytes());
        for v in &n {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    bytes
}

// 1 ------------------------------------------------------------------------

fn sequential_oracle() -> Check {
    let mut slowest = Duration::ZERO;
    for (c, cc) in combos() {
        let g = graph(c, cc);
        let mut model = ReferenceModel::new();
        let mut rng = SplitMix64::new(11);
        let t = Instant::now();
        for _ in 0..100_000 {
            let (u, v) = (rng.below(1000), rng.below(1000));
            let op = if rng.below(3) < 2 {
                EdgeOp::Insert(u, v)
            } else {
                EdgeOp::Delete(u, v)
            };
            let ts = match op {
                EdgeOp::Insert(u, v) => g.insert_edge(u, v),
                EdgeOp::Delete(u, v) => g.delete_edge(u, v),
            }
            .map_err(err(format!("{c}/{cc}")))?;
            model.apply(ts, &[op]).map_err(err(format!("{c}/{cc}")))?;
        }
        let r = g.begin_read();
        oracle_check(&r, &model, r.start_ts()).map_err(err(format!("{c}/{cc}")))?;
        drop(r);
        g.check().map_err(err(format!("{c}/{cc} structure")))?;
        let d = t.elapsed();
        if d > Duration::from_secs(60) {
            return Err(format!("{c}/{cc} took {d:?}"));
        }
        slowest = slowest.max(d);
    }
    Ok(format!("11 combinations x 1e5 ops match the model; slowest {slowest:.2?}"))
}

// 2 ------------------------------------------------------------------------

const SER_VERTS: u64 = 128;

fn serializable_run(c: ContainerKind, cc: CcMode) -> Result<(usize, usize, Duration), String> {
    let g = graph(c, cc);
    let initial: Vec<(u64, u64)> = (0..SER_VERTS).map(|u| (u, (u * 7 + 1) % SER_VERTS)).collect();
    g.load_edges(&initial).map_err(err("load"))?;
    let done = AtomicBool::new(false);
    let start = Instant::now();
    let (logs, scans) = std::thread::scope(|s| {
        let writers: Vec<_> = (0..8u64)
            .map(|w| {
                let g = &g;
                s.spawn(move || -> Result<Vec<(Timestamp, Vec<EdgeOp>)>, String> {
                    let mut rng = SplitMix64::new(100 + w);
                    let mut log = Vec::with_capacity(10_000);
                    for _ in 0..10_000 {
                        let k = 1 + rng.below(3) as usize;
                        let ops: Vec<EdgeOp> = (0..k)
                            .map(|_| {
                                // A small hot range keeps lock sets overlapping.
                                let u = rng.below(SER_VERTS / 4);
                                let v = rng.below(SER_VERTS);
                                if rng.below(2) == 0 {
                                    EdgeOp::Insert(u, v)
                                } else {
                                    EdgeOp::Delete(u, v)
                                }
                            })
                            .collect();
                        let dv = ops.iter().flat_map(|o| [o.source(), o.target()]);
                        let mut t = g.begin_write(dv).map_err(err("begin"))?;
                        for o in &ops {
                            match *o {
                                EdgeOp::Insert(u, v) => t.insert_edge(u, v),
                                EdgeOp::Delete(u, v) => t.delete_edge(u, v),
                            }
                            .map_err(err("write"))?;
                        }
                        log.push((t.commit().map_err(err("commit"))?, ops));
                    }
                    Ok(log)
                })
            })
            .collect();
        let readers: Vec<_> = (0..8)
            .map(|_| {
                let (g, done) = (&g, &done);
                s.spawn(move || {
                    let mut seen = Vec::new();
                    loop {
                        let finished = done.load(Ordering::Acquire);
                        let r = g.begin_read();
                        seen.push((r.start_ts(), hash_bytes(&scan_digest(&r, SER_VERTS))));
                        drop(r);
                        if finished {
                            break;
                        }
                        std::thread::yield_now();
                    }
                    seen
                })
            })
            .collect();
        let logs: Vec<_> = writers.into_iter().map(|h| h.join().expect("writer panicked")).collect();
        done.store(true, Ordering::Release);
        let scans: Vec<_> = readers.into_iter().flat_map(|h| h.join().expect("reader panicked")).collect();
        (logs, scans)
    });
    let elapsed = start.elapsed();
    let mut log = Vec::new();
    for l in logs {
        log.extend(l?);
    }
    let mut model = ReferenceModel::with_initial(&initial);
    model.replay(log).map_err(err("commit log"))?;
    if model.last_ts() != g.now() {
        return Err(format!("clock {} but log ends at {}", g.now(), model.last_ts()));
    }
    let mut expected: HashMap<Timestamp, u64> = HashMap::new();
    for &(at, h) in &scans {
        let want = *expected
            .entry(at)
            .or_insert_with(|| hash_bytes(&model_digest(&model, SER_VERTS, at)));
        if want != h {
            return Err(format!("{c}/{cc}: reader at t={at} disagrees with the model"));
        }
    }
    let r = g.begin_read();
    oracle_check(&r, &model, r.start_ts()).map_err(err(format!("{c}/{cc} final")))?;
    Ok((scans.len(), expected.len(), elapsed))
}

fn serializability() -> Check {
    let mut notes = Vec::new();
    for cc in [CcMode::Fine, CcMode::Coarse] {
        let containers: &[ContainerKind] = if cc == CcMode::Fine {
            &ContainerKind::ALL
        } else {
            &[ContainerKind::Cow]
        };
        let mut total = Duration::ZERO;
        let mut scans = 0;
        for &c in containers {
            let (n, _, d) = serializable_run(c, cc)?;
            scans += n;
            total += d;
        }
        if total > Duration::from_secs(120) {
            return Err(format!("{cc} took {total:?}"));
        }
        notes.push(format!("{cc}: {scans} reader scans exact in {total:.1?}"));
    }
    Ok(notes.join("; "))
}

// 3 ------------------------------------------------------------------------

fn snapshot_stability() -> Check {
    let g = graph(ContainerKind::Cow, CcMode::Coarse);
    let edges = rmat(10, 20_000, 5);
    g.load_edges(&edges).map_err(err("load"))?;
    let bound = 1 << 10;
    let pinned = g.begin_read();
    let before = scan_digest(&pinned, bound);
    let mut older = Vec::new();
    let mut rng = SplitMix64::new(9);
    for i in 0..1000 {
        if i % 100 == 0 {
            let r = g.begin_read();
            let h = hash_bytes(&scan_digest(&r, bound));
            older.push((r, h));
        }
        let (u, v) = (rng.below(bound), rng.below(bound));
        if rng.below(2) == 0 {
            g.insert_edge(u, v)
        } else {
            g.delete_edge(u, v)
        }
        .map_err(err("commit"))?;
    }
    if g.now() != Timestamp(1000) {
        return Err(format!("expected 1000 commits, clock at {}", g.now()));
    }
    if scan_digest(&pinned, bound) != before {
        return Err("pinned reader's scan changed".into());
    }
    for (r, h) in &older {
        if hash_bytes(&scan_digest(r, bound)) != *h {
            return Err(format!("snapshot at t={} changed", r.start_ts()));
        }
    }
    let now = g.begin_read();
    if scan_digest(&now, bound) == before {
        return Err("1000 commits left the latest view unchanged".into());
    }
    Ok(format!(
        "pinned scan of {} bytes identical after 1000 commits; {} older snapshots unchanged",
        before.len(),
        older.len()
    ))
}

// 4 ------------------------------------------------------------------------

fn deadlock_freedom() -> Check {
    const N: u64 = 16;
    let g = Arc::new(graph(ContainerKind::Sorted, CcMode::Fine));
    for u in 0..N {
        g.insert_vertex(u);
    }
    let (tx, rx) = mpsc::channel();
    let start = Instant::now();
    for i in 0..N {
        let (g, tx) = (Arc::clone(&g), tx.clone());
        std::thread::spawn(move || {
            let j = (i + 1) % N;
            let r = (0..10_000).try_for_each(|k| {
                // Writer 15 names {15, 0}: the reverse of everyone else's order.
                let mut t = g.begin_write([i, j])?;
                if k % 2 == 0 {
                    t.insert_edge(i, j)?;
                    t.insert_edge(j, i)?;
                } else {
                    t.delete_edge(j, i)?;
                    t.delete_edge(i, j)?;
                }
                t.commit().map(|_| ())
            });
            let _ = tx.send(r);
        });
    }
    drop(tx);
    let deadline = start + Duration::from_secs(60);
    for _ in 0..N {
        let left = deadline.saturating_duration_since(Instant::now());
        match rx.recv_timeout(left) {
            Ok(Ok(())) => {}
            Ok(Err(e)) => return Err(format!("writer failed: {e}")),
            Err(_) => return Err("watchdog expired: writers stalled".into()),
        }
    }
    let commits = g.now().0;
    if commits != N * 10_000 {
        return Err(format!("{commits} commits, expected {}", N * 10_000));
    }
    Ok(format!("16 writers x 1e4 ring transactions done in {:.2?}", start.elapsed()))
}

// 5 ------------------------------------------------------------------------

fn memory_accounting() -> Check {
    let edges: Vec<_> = {
        let mut e = rmat(12, 40_000, 3);
        e.sort_unstable();
        e.dedup();
        e
    };
    let m = edges.len();
    let csr = Csr::from_edges(&edges).memory_bytes();
    let coarse = graph(ContainerKind::Cow, CcMode::Coarse);
    coarse.load_edges(&edges).map_err(err("load"))?;
    let coarse_payload = coarse.memory().payload_bytes;
    if coarse_payload != m * 8 {
        return Err(format!("coarse payload {coarse_payload} bytes for {m} edges"));
    }
    let mut fine_min = usize::MAX;
    for (c, cc) in combos() {
        let g = graph(c, cc);
        g.load_edges(&edges).map_err(err("load"))?;
        let s = g.memory();
        let words = if cc == CcMode::Fine { 3 } else { 1 };
        if s.payload_bytes != m * words * 8 || s.entry_words != words {
            return Err(format!(
                "{c}/{cc}: {} payload bytes ({} words/entry) for {m} edges",
                s.payload_bytes, s.entry_words
            ));
        }
        if cc == CcMode::Fine {
            fine_min = fine_min.min(s.total_bytes());
            if s.total_bytes() < 3 * coarse_payload {
                return Err(format!("{c}/fine total {} < 3 x coarse payload", s.total_bytes()));
            }
        }
        if s.total_bytes() <= csr {
            return Err(format!("{c}/{cc} total {} <= CSR {csr}", s.total_bytes()));
        }
    }
    Ok(format!(
        "{m} edges: fine 3 words/edge, coarse 1; smallest fine total {:.2}x coarse payload; every store above CSR ({csr} bytes)",
        fine_min as f64 / coarse_payload as f64
    ))
}

// 6 ------------------------------------------------------------------------

fn complexity_trends() -> Check {
    let sizes = [1usize << 10, 1 << 14, 1 << 18];
    let cfg = NeighborConfig::default();
    let mut rng = SplitMix64::new(21);
    let mut notes = Vec::new();

    // Sorted array: worst-case comparisons per search.
    for &n in &sizes {
        let keys: Vec<u64> = (0..n as u64).map(|k| k * 2).collect();
        let a = SortedArray::bulk_load(&cfg, keys.iter().map(|&k| PlainEntry(k)).collect());
        let bound = (n as f64).log2().ceil() as u64 + 1;
        for _ in 0..2000 {
            let mut c = OpCounts::default();
            let k = rng.below(2 * n as u64 + 1);
            let _ = a.search(k, &mut c);
            if c.comparisons > bound {
                return Err(format!("sorted n={n}: {} comparisons > {bound}", c.comparisons));
            }
        }
    }
    notes.push("sorted search <= ceil(log2 n)+1 comparisons".to_string());

    // PMA: amortized moves per insert against log^2 n. Ascending inserts
    // always land in the rightmost, densest window: the classic worst case.
    let mut cs = Vec::new();
    for &n in &sizes {
        let mut p: Pma<PlainEntry> = NeighborIndex::new(&cfg);
        for k in 0..n as u64 {
            p.insert(PlainEntry(k));
        }
        p.check().map_err(err(format!("pma n={n}")))?;
        let lg = (n as f64).log2();
        cs.push(p.moves() as f64 / n as f64 / (lg * lg));
    }
    let (lo, hi) = min_max(&cs);
    if hi > 2.0 * lo {
        return Err(format!("pma c = moves/(n log^2 n) not stable: {cs:.4?}"));
    }
    notes.push(format!("pma c {cs:.3?}"));

    // Skip list: node visits per search against log n. With promotion
    // probability 1/2 a search expects at most 2 visits per level, so
    // c = 2 bounds it; the index spans blocks, not keys, so the growth
    // trend is fitted against log2 of the block count.
    let mut cs = Vec::new();
    for &n in &sizes {
        let mut keys: Vec<u64> = (0..n as u64).map(|k| k * 3).collect();
        let s = SegmentedSkipList::bulk_load(&cfg, keys.iter().map(|&k| PlainEntry(k)).collect());
        SplitMix64::new(n as u64).shuffle(&mut keys);
        let mut c = OpCounts::default();
        let probes = 5000.min(n);
        for &k in &keys[..probes] {
            s.find(k, &mut c);
        }
        let avg = c.visits as f64 / probes as f64;
        let lg = (n as f64).log2();
        if avg > 2.0 * lg {
            return Err(format!("skip list n={n}: {avg:.1} visits > 2 log2 n"));
        }
        cs.push(avg / (s.block_count() as f64).log2().max(1.0));
    }
    let (lo, hi) = min_max(&cs);
    if hi > 2.0 * lo {
        return Err(format!("skip list visits/log2(blocks) not stable: {cs:.3?}"));
    }
    notes.push(format!("skip list visits <= 2 log2 n, per-level c {cs:.2?}"));
    Ok(notes.join("; "))
}

fn min_max(xs: &[f64]) -> (f64, f64) {
    xs.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
}

// 7 ------------------------------------------------------------------------

fn fuzz<S: NeighborIndex<PlainEntry>>(
    name: &str,
    cfg: &NeighborConfig,
    ops: usize,
    extra: impl Fn(&S, &std::collections::BTreeSet<u64>) -> Result<(), String>,
) -> Result<(), String> {
    let mut s = S::new(cfg);
    let mut model = std::collections::BTreeSet::new();
    let mut rng = SplitMix64::new(name.len() as u64);
    for i in 0..ops {
        // Drift the hot range so sets grow, shrink and move.
        let base = (i as u64 / 50_000) * 1024;
        let k = base + rng.below(1 << 14);
        if rng.below(5) < 3 {
            if model.insert(k) {
                s.insert(PlainEntry(k));
            }
        } else if model.remove(&k) != s.remove(k).is_some() {
            return Err(format!("{name}: remove({k}) disagrees at op {i}"));
        }
        if i % 20_000 == 0 || i + 1 == ops {
            s.check().map_err(err(format!("{name} op {i}")))?;
            extra(&s, &model).map_err(err(format!("{name} op {i}")))?;
            if s.len() != model.len() {
                return Err(format!("{name}: len {} vs {}", s.len(), model.len()));
            }
        }
    }
    Ok(())
}

fn structural_invariants() -> Check {
    const OPS: usize = 1_000_000;
    let b = 64;
    let cfg = NeighborConfig {
        block_size: b,
        ..NeighborConfig::default()
    };
    fuzz::<SegmentedSkipList<PlainEntry>>("skip list", &cfg, OPS, |s, _| {
        let lens = s.block_lens();
        if lens.len() > 1 && lens.iter().any(|&l| l < b / 2 || l > b) {
            return Err(format!("block fill outside [{}, {b}]", b / 2));
        }
        Ok(())
    })?;
    fuzz::<Pma<PlainEntry>>("pma", &cfg, OPS, |_, _| Ok(()))?;
    fuzz::<CowSet<PlainEntry>>("cow", &cfg, OPS, |s, _| {
        match s.heads().iter().find(|&&h| h % b as u64 != 0) {
            Some(h) => Err(format!("head {h} not a multiple of {b}")),
            None => Ok(()),
        }
    })?;
    fuzz::<UnsortedArray<PlainEntry>>("unsorted", &cfg, OPS, |s, model| {
        match model.iter().find(|&&k| !s.may_contain(k)) {
            Some(k) => Err(format!("bloom false negative for {k}")),
            None => Ok(()),
        }
    })?;
    let mut f = BloomFilter::with_bytes(1 << 16);
    let mut rng = SplitMix64::new(77);
    let keys: Vec<u64> = (0..OPS).map(|_| rng.next_u64()).collect();
    for &k in &keys {
        f.insert(k);
    }
    if let Some(k) = keys.iter().find(|&&k| !f.may_contain(k)) {
        return Err(format!("bloom false negative for {k}"));
    }
    Ok("skip list, PMA, CoW and unsorted+bloom each survived 1e6 fuzzed ops".into())
}

// 8 ------------------------------------------------------------------------

fn erdos_renyi(n: u64, p: f64, seed: u64, symmetric: bool) -> Vec<(VertexId, VertexId)> {
    let mut rng = SplitMix64::new(seed);
    let mut e = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u == v || (symmetric && v < u) {
                continue;
            }
            if rng.next_f64() < p {
                e.push((u, v));
                if symmetric {
                    e.push((v, u));
                }
            }
        }
    }
    e.sort_unstable();
    e
}

struct Answers {
    pr: Vec<f64>,
    bfs: Vec<u64>,
    sssp: Vec<u64>,
    wcc: Vec<u64>,
    tc: u64,
}

fn answers<V: GraphView>(v: &V, directed: &V) -> Result<Answers, Error> {
    Ok(Answers {
        pr: analytics::pagerank(directed, analytics::DAMPING, analytics::PR_ITERS),
        bfs: analytics::bfs(directed, 0)?,
        sssp: analytics::sssp(directed, 0)?,
        wcc: analytics::wcc(directed),
        tc: analytics::triangle_count(v)?,
    })
}

fn analytics_equivalence() -> Check {
    // K4.
    let k4: Vec<_> = (0..4u64).flat_map(|u| (0..4).filter(move |&v| v != u).map(move |v| (u, v))).collect();
    let t = analytics::triangle_count(&Csr::from_edges(&k4)).map_err(err("k4"))?;
    if t != 4 {
        return Err(format!("K4 has {t} triangles"));
    }
    let n = 256u64;
    let sym = erdos_renyi(n, 0.06, 1, true);
    let dir = erdos_renyi(n, 0.02, 2, false);
    let weighted: Vec<_> = dir.iter().map(|&(u, v)| (u, v, hash_weight(u, v))).collect();
    let oracle = Answers {
        pr: reference::pagerank(n as usize, &dir, analytics::DAMPING, analytics::PR_ITERS),
        bfs: reference::bfs(n as usize, &dir, 0),
        sssp: reference::bellman_ford(n as usize, &weighted, 0),
        wcc: reference::components(n as usize, &dir),
        tc: reference::triangles(n as usize, &sym),
    };
    let compare = |name: &str, a: &Answers| -> Result<(), String> {
        let worst = a.pr.iter().zip(&oracle.pr).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        if a.pr.len() != oracle.pr.len() || worst > 1e-9 {
            return Err(format!("{name}: pagerank off by {worst:e}"));
        }
        if a.bfs != oracle.bfs || a.sssp != oracle.sssp || a.wcc != oracle.wcc {
            return Err(format!("{name}: traversal results differ from the oracles"));
        }
        if a.tc != oracle.tc {
            return Err(format!("{name}: {} triangles, expected {}", a.tc, oracle.tc));
        }
        Ok(())
    };
    let (cs, cd) = (Csr::build(n, &sym).map_err(err("csr"))?, Csr::build(n, &dir).map_err(err("csr"))?);
    compare("csr", &answers(&cs, &cd).map_err(err("csr"))?)?;
    let mut views = 1;
    for (c, cc) in combos() {
        let (gs, gd) = (graph(c, cc), graph(c, cc));
        gs.load_edges(&sym).map_err(err("load"))?;
        gd.load_edges(&dir).map_err(err("load"))?;
        let (rs, rd) = (gs.begin_read(), gd.begin_read());
        if c.is_sorted() {
            compare(&format!("{c}/{cc}"), &answers(&rs, &rd).map_err(err(format!("{c}/{cc}")))?)?;
            views += 1;
        } else {
            match analytics::triangle_count(&rs) {
                Err(Error::Unsupported(_)) => {}
                other => return Err(format!("{c}/{cc}: triangle count gave {other:?}")),
            }
        }
    }
    Ok(format!(
        "K4 = 4; {views} sorted views match the oracles ({} triangles); unsorted TC unsupported",
        oracle.tc
    ))
}

// 9 ------------------------------------------------------------------------

const STAR: u64 = 1 << 16;

fn star(c: ContainerKind, cc: CcMode) -> Result<Graph, String> {
    let g = graph(c, cc);
    let edges: Vec<_> = (1..=STAR).map(|v| (0, v)).collect();
    g.load_edges(&edges).map_err(err("load"))?;
    Ok(g)
}

fn scan_time(g: &Graph, reps: usize) -> Duration {
    best_of(reps, || {
        let r = g.begin_read();
        let mut s = 0u64;
        let n = r.scan_neighbors(0, |v| s = s.wrapping_add(v));
        assert_eq!(n as u64, STAR);
        std::hint::black_box(s);
    })
}

fn version_degradation() -> Check {
    let mut notes = Vec::new();
    for c in [ContainerKind::Sorted, ContainerKind::Pma, ContainerKind::Segsl, ContainerKind::Cow] {
        let g = star(c, CcMode::Fine)?;
        let before = scan_time(&g, 40);
        let k = g.inject_versions(32.0, 3, 5).map_err(err("inject"))?;
        if k != (STAR as f64 * 0.32) as usize {
            return Err(format!("{c}: {k} keys given versions"));
        }
        let after = scan_time(&g, 40);
        let slow = after.as_secs_f64() / before.as_secs_f64() - 1.0;
        if slow < 0.10 {
            return Err(format!("fine {c}: only {:.1}% slower with versions", slow * 100.0));
        }
        notes.push(format!("fine {c} -{:.0}%", slow * 100.0));
    }
    let g = star(ContainerKind::Cow, CcMode::Coarse)?;
    let before = scan_time(&g, 40);
    g.inject_versions(32.0, 3, 5).map_err(err("inject"))?;
    let after = scan_time(&g, 40);
    let change = after.as_secs_f64() / before.as_secs_f64() - 1.0;
    if change.abs() >= 0.05 {
        return Err(format!("coarse scan changed {:.1}%", change * 100.0));
    }
    notes.push(format!("coarse {:+.1}%", change * 100.0));
    Ok(notes.join(", "))
}

// 10 -----------------------------------------------------------------------

/// Scan throughput (edges per second) over the scan stream, one read
/// transaction per scan.
fn scan_metrics(g: &Graph, targets: &[VertexId], reps: usize) -> ClassMetrics {
    let mut edges = 0u64;
    let d = best_of(reps, || {
        edges = 0;
        for &u in targets {
            let r = g.begin_read();
            edges += r.scan_neighbors(u, |v| {
                std::hint::black_box(v);
            }) as u64;
        }
    });
    ClassMetrics::new(OpClass::Scan, edges, d.as_secs_f64(), &[])
}

fn cc_overhead() -> Check {
    let mut edges = rmat(12, 200_000, 8);
    edges.sort_unstable();
    edges.dedup();
    // The standard scan stream: the top 20% of vertices by degree.
    let targets: Vec<VertexId> =
        workload::gen_scan_stream(&workload::degrees(1 << 12, &edges), 8, ScanSelection::TopDegree)
            .iter()
            .map(|r| r.u)
            .collect();
    let amp = |c: ContainerKind, cc: CcMode| -> Result<f64, String> {
        // Coarse mode always indexes vertices with a persistent tree; give
        // its baseline the same index so only concurrency control differs.
        let off_cfg = GraphConfig {
            vertex_index: if cc == CcMode::Coarse {
                VertexIndexKind::Tree
            } else {
                VertexIndexKind::Dense
            },
            ..GraphConfig::new(c, CcMode::Off)
        };
        let g = graph(c, cc);
        let off = Graph::new(off_cfg).map_err(err("config"))?;
        g.load_edges(&edges).map_err(err("load"))?;
        off.load_edges(&edges).map_err(err("load"))?;
        // Interleave rounds so drift affects both sides alike.
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for _ in 0..5 {
            a.push(scan_metrics(&g, &targets, 4));
            b.push(scan_metrics(&off, &targets, 4));
        }
        let best = |xs: Vec<ClassMetrics>| {
            xs.into_iter()
                .max_by(|x, y| x.throughput.total_cmp(&y.throughput))
                .unwrap()
        };
        let cb = cost_breakdown(&[best(a)], &[best(b)]).map_err(err("breakdown"))?;
        Ok(cb[0].amplification)
    };
    // Heap layout is fixed per build, so rounds within one build share any
    // layout luck; take the median over independent builds.
    let amp = |c: ContainerKind, cc: CcMode| -> Result<f64, String> {
        let mut xs = [amp(c, cc)?, amp(c, cc)?, amp(c, cc)?];
        xs.sort_unstable_by(f64::total_cmp);
        Ok(xs[1])
    };
    let mut notes = Vec::new();
    for c in ContainerKind::ALL {
        let x = amp(c, CcMode::Fine)?;
        if x <= 1.0 {
            return Err(format!("fine {c} amplification {x:.3}"));
        }
        notes.push(format!("fine {c} {x:.2}"));
    }
    let x = amp(ContainerKind::Cow, CcMode::Coarse)?;
    if !(0.9..=1.1).contains(&x) {
        return Err(format!("coarse amplification {x:.3} outside [0.9, 1.1]"));
    }
    notes.push(format!("coarse {x:.2}"));
    Ok(format!("scan amplification: {}", notes.join(", ")))
}

// 11 -----------------------------------------------------------------------

fn batch_trend() -> Check {
    let list = EdgeList {
        edges: rmat(14, 120_000, 13),
        ..Default::default()
    };
    let w = WorkloadSpec::from_edges(list, true, 4, ScanSelection::TopDegree);
    let run = |batch: usize| -> Result<f64, String> {
        let cfg = BenchConfig {
            graph: GraphConfig {
                batch_threads: 8,
                ..GraphConfig::new(ContainerKind::Cow, CcMode::Coarse)
            },
            batch_size: batch,
            classes: vec![OpClass::Insert],
            ..Default::default()
        };
        let mut best: f64 = 0.0;
        for _ in 0..3 {
            let r = run_benchmark(&cfg, &w).map_err(err(format!("batch {batch}")))?;
            if !r.valid {
                return Err(r.failures.join("; "));
            }
            best = best.max(r.class(OpClass::Insert).unwrap().throughput);
        }
        Ok(best)
    };
    let one = run(1)?;
    let big = run(1 << 10)?;
    let ratio = big / one;
    let msg = format!(
        "{} inserts: batch 1 {:.0}/s, batch 1024 {:.0}/s, ratio {ratio:.2} on {} cpu(s)",
        w.inserts.len(),
        one,
        big,
        std::thread::available_parallelism().map_or(1, |n| n.get())
    );
    if ratio >= 4.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

// 12 -----------------------------------------------------------------------

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(err("tempdir"))?;
    let edges = rmat(11, 30_000, 17);
    for how in [ScanSelection::TopDegree, ScanSelection::DegreeWeighted] {
        let mut files = Vec::new();
        for i in 0..2 {
            let list = EdgeList {
                edges: edges.clone(),
                ..Default::default()
            };
            let p = dir.path().join(format!("{how:?}-{i}"));
            WorkloadSpec::from_edges(list, false, 99, how).save(&p).map_err(err("save"))?;
            let mut names: Vec<_> = std::fs::read_dir(&p)
                .map_err(err("list"))?
                .map(|e| e.unwrap().path())
                .collect();
            names.sort();
            let bytes: Vec<Vec<u8>> = names.iter().map(|n| std::fs::read(n).unwrap()).collect();
            files.push(bytes);
        }
        if files[0] != files[1] {
            return Err(format!("{how:?} workload files differ between runs"));
        }
    }
    if workload::gen_synthetic(64, 1 << 16, 8, 3).ok() != workload::gen_synthetic(64, 1 << 16, 8, 3).ok() {
        return Err("synthetic sets differ".into());
    }
    let w = WorkloadSpec::load(&dir.path().join("TopDegree-0")).map_err(err("load"))?;
    let mut seen = Vec::new();
    for (c, cc) in [
        (ContainerKind::Sorted, CcMode::Fine),
        (ContainerKind::Unsorted, CcMode::Fine),
        (ContainerKind::Cow, CcMode::Coarse),
    ] {
        let cfg = BenchConfig {
            graph: GraphConfig::new(c, cc),
            ..Default::default()
        };
        let mut runs = Vec::new();
        for _ in 0..2 {
            let g = Graph::new(cfg.graph.clone()).map_err(err("graph"))?;
            g.load_edges(&w.initial_edges).map_err(err("load"))?;
            let r = run_on(&g, &cfg, &w, 0.0, 0).map_err(err("bench"))?;
            let read = g.begin_read();
            let state = scan_digest(&read, read.vertex_bound());
            runs.push((r.outcome_digest, r.final_ts, state));
        }
        if runs[0] != runs[1] {
            return Err(format!("{c}/{cc}: replay differs"));
        }
        seen.push(runs[0].0);
    }
    Ok(format!(
        "workload files and synthetic sets byte-identical; 3 single-threaded replays identical (digests {:x?})",
        seen
    ))
}

fn main() {
    // `cargo test` passes harness flags; a name filter selects criteria.
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [(&str, fn() -> Check); 12] = [
        ("sequential oracle equivalence", sequential_oracle),
        ("serializable concurrent reads and writes", serializability),
        ("coarse snapshot stability", snapshot_stability),
        ("ordered locking is deadlock free", deadlock_freedom),
        ("memory word accounting", memory_accounting),
        ("complexity trends", complexity_trends),
        ("structural invariants under fuzzing", structural_invariants),
        ("analytics equivalence", analytics_equivalence),
        ("version injection scan degradation", version_degradation),
        ("concurrency-control overhead", cc_overhead),
        ("batch granularity trend", batch_trend),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.iter().any(|x| *x == id || name.contains(x.as_str())) {
            continue;
        }
        let t = Instant::now();
        let r = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match r {
            Ok(detail) => println!("criterion {id:>2} PASS {name} ({:.1?}): {detail}", t.elapsed()),
            Err(why) => {
                failed += 1;
                println!("criterion {id:>2} FAIL {name} ({:.1?}): {why}", t.elapsed());
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
