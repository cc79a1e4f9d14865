//! Multi-threaded workload executor: one stream per worker thread.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::Hasher;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Barrier;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::memory::resident_set_bytes;
use super::metrics::{ClassMetrics, OpClass, Recorder};
use crate::engine::MemoryStats;
use crate::graph::{Graph, GraphConfig};
use crate::types::EdgeOp;
use crate::workload::{OpKind, OpRecord, WorkloadSpec};
use crate::{Error, Result};

/// Benchmark parameters; echoed verbatim into the run manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub graph: GraphConfig,
    /// Workers per phase when readers and writers are both zero.
    pub threads: usize,
    /// Mixed mode: reader threads running search and scan streams while
    /// writer threads run the insert stream.
    pub readers: usize,
    pub writers: usize,
    /// Consecutive mutations applied per transaction.
    pub batch_size: usize,
    /// One latency sample per this many operations.
    pub window: u64,
    pub seed: u64,
    /// Phases to run, in order (micro mode).
    pub classes: Vec<OpClass>,
    /// Percentage of each neighbor set given extra versions before the run.
    pub inject_pct: f64,
    pub versions_per_key: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            graph: GraphConfig::default(),
            threads: 1,
            readers: 0,
            writers: 0,
            batch_size: 1,
            window: 100,
            seed: 42,
            classes: vec![OpClass::Insert, OpClass::Search, OpClass::Scan],
            inject_pct: 0.0,
            versions_per_key: 3,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        self.graph.validate()?;
        if self.threads == 0 {
            return Err(Error::Config("threads must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if self.window == 0 {
            return Err(Error::Config("latency window must be positive".into()));
        }
        if (self.readers == 0) != (self.writers == 0) {
            return Err(Error::Config(
                "mixed mode needs both readers and writers".into(),
            ));
        }
        if !(0.0..=100.0).contains(&self.inject_pct) {
            return Err(Error::Config(format!(
                "version fraction {} outside [0, 100]",
                self.inject_pct
            )));
        }
        Ok(())
    }

    pub fn mixed(&self) -> bool {
        self.readers > 0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricsReport {
    pub config: BenchConfig,
    pub classes: Vec<ClassMetrics>,
    pub readers: usize,
    pub writers: usize,
    pub load_seconds: f64,
    pub injected_keys: usize,
    pub final_ts: u64,
    pub memory: MemoryStats,
    pub rss_bytes: Option<u64>,
    /// Hash of every operation outcome in stream order (timings excluded).
    pub outcome_digest: u64,
    pub valid: bool,
    pub failures: Vec<String>,
}

impl MetricsReport {
    pub fn class(&self, c: OpClass) -> Option<&ClassMetrics> {
        self.classes.iter().find(|m| m.class == c)
    }
}

/// Load the initial graph, then run the configured phases.
pub fn run_benchmark(cfg: &BenchConfig, w: &WorkloadSpec) -> Result<MetricsReport> {
    cfg.validate()?;
    let g = Graph::new(cfg.graph.clone())?;
    let t = Instant::now();
    g.load_edges(&w.initial_edges)?;
    let load_seconds = t.elapsed().as_secs_f64();
    let injected_keys = if cfg.inject_pct > 0.0 {
        g.inject_versions(cfg.inject_pct, cfg.versions_per_key, cfg.seed)?
    } else {
        0
    };
    run_on(&g, cfg, w, load_seconds, injected_keys)
}

/// Run the phases against an already loaded graph.
pub fn run_on(
    g: &Graph,
    cfg: &BenchConfig,
    w: &WorkloadSpec,
    load_seconds: f64,
    injected_keys: usize,
) -> Result<MetricsReport> {
    let mut total = Recorder::new(cfg.window);
    let mut wall = BTreeMap::new();
    let mut failures = Vec::new();
    let mut digest = DefaultHasher::new();

    if cfg.mixed() {
        let writers = partition(&w.inserts, cfg.writers);
        let mut reads: Vec<OpRecord> = w.searches.clone();
        reads.extend_from_slice(&w.scans);
        let readers = partition(&reads, cfg.readers);
        let out = run_mixed(g, cfg, &writers, &readers);
        for (class, d) in [OpClass::Insert, OpClass::Search, OpClass::Scan]
            .into_iter()
            .map(|c| (c, out.wall))
        {
            wall.insert(class, d);
        }
        for r in out.workers {
            match r {
                Ok((rec, h)) => {
                    total.merge(rec);
                    digest.write_u64(h);
                }
                Err(e) => failures.push(e),
            }
        }
    } else {
        for &class in &cfg.classes {
            let stream: &[OpRecord] = match class {
                OpClass::Insert | OpClass::Delete => &w.inserts,
                OpClass::Search => &w.searches,
                OpClass::Scan => &w.scans,
            };
            let parts = partition(stream, cfg.threads);
            let (d, results) = run_phase(g, cfg, &parts);
            wall.insert(class, d);
            for r in results {
                match r {
                    Ok((rec, h)) => {
                        total.merge(rec);
                        digest.write_u64(h);
                    }
                    Err(e) => failures.push(e),
                }
            }
        }
    }

    Ok(MetricsReport {
        config: cfg.clone(),
        classes: total.summarize(&wall),
        readers: cfg.readers,
        writers: cfg.writers,
        load_seconds,
        injected_keys,
        final_ts: g.now().0,
        memory: g.memory(),
        rss_bytes: resident_set_bytes(),
        outcome_digest: digest.finish(),
        valid: failures.is_empty(),
        failures,
    })
}

/// Split a stream into `k` contiguous parts.
pub fn partition(ops: &[OpRecord], k: usize) -> Vec<Vec<OpRecord>> {
    let k = k.max(1);
    let per = ops.len().div_ceil(k);
    let mut parts: Vec<Vec<OpRecord>> = ops.chunks(per.max(1)).map(|c| c.to_vec()).collect();
    parts.resize(k, Vec::new());
    parts
}

type WorkerResult = std::result::Result<(Recorder, u64), String>;

fn run_phase(g: &Graph, cfg: &BenchConfig, parts: &[Vec<OpRecord>]) -> (Duration, Vec<WorkerResult>) {
    let barrier = Barrier::new(parts.len() + 1);
    std::thread::scope(|s| {
        let handles: Vec<_> = parts
            .iter()
            .map(|p| {
                let barrier = &barrier;
                s.spawn(move || {
                    let mut rec = Recorder::new(cfg.window);
                    let mut h = DefaultHasher::new();
                    barrier.wait();
                    run_stream(g, p, cfg.batch_size, &mut rec, &mut h)
                        .map(|()| (rec, h.finish()))
                        .map_err(|e| e.to_string())
                })
            })
            .collect();
        barrier.wait();
        let start = Instant::now();
        let results: Vec<WorkerResult> = handles.into_iter().map(join).collect();
        (start.elapsed(), results)
    })
}

struct MixedOutcome {
    wall: Duration,
    workers: Vec<WorkerResult>,
}

fn run_mixed(
    g: &Graph,
    cfg: &BenchConfig,
    writers: &[Vec<OpRecord>],
    readers: &[Vec<OpRecord>],
) -> MixedOutcome {
    let barrier = Barrier::new(writers.len() + readers.len() + 1);
    let done = AtomicBool::new(false);
    std::thread::scope(|s| {
        let whs: Vec<_> = writers
            .iter()
            .map(|p| {
                let barrier = &barrier;
                s.spawn(move || {
                    let mut rec = Recorder::new(cfg.window);
                    let mut h = DefaultHasher::new();
                    barrier.wait();
                    run_stream(g, p, cfg.batch_size, &mut rec, &mut h)
                        .map(|()| (rec, h.finish()))
                        .map_err(|e| e.to_string())
                })
            })
            .collect();
        let rhs: Vec<_> = readers
            .iter()
            .map(|p| {
                let (barrier, done) = (&barrier, &done);
                s.spawn(move || {
                    let mut rec = Recorder::new(cfg.window);
                    let mut h = DefaultHasher::new();
                    barrier.wait();
                    loop {
                        run_stream(g, p, 1, &mut rec, &mut h).map_err(|e| e.to_string())?;
                        if done.load(Ordering::Acquire) || p.is_empty() {
                            break;
                        }
                    }
                    Ok((rec, h.finish()))
                })
            })
            .collect();
        barrier.wait();
        let start = Instant::now();
        let mut workers: Vec<WorkerResult> = whs.into_iter().map(join).collect();
        done.store(true, Ordering::Release);
        workers.extend(rhs.into_iter().map(join));
        MixedOutcome {
            wall: start.elapsed(),
            workers,
        }
    })
}

fn join(h: std::thread::ScopedJoinHandle<'_, WorkerResult>) -> WorkerResult {
    h.join()
        .unwrap_or_else(|p| Err(format!("worker panicked: {}", panic_message(&p))))
}

fn panic_message(p: &Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = p.downcast_ref::<String>() {
        s.clone()
    } else {
        "unknown panic".into()
    }
}

fn mutation(r: &OpRecord) -> Option<EdgeOp> {
    match r.kind {
        OpKind::InsEdge => Some(EdgeOp::Insert(r.u, r.v?)),
        OpKind::DelEdge => Some(EdgeOp::Delete(r.u, r.v?)),
        _ => None,
    }
}

fn class_of(op: &EdgeOp) -> OpClass {
    if op.is_insert() {
        OpClass::Insert
    } else {
        OpClass::Delete
    }
}

/// Execute one stream, recording per-class counts and sampled latencies and
/// hashing every outcome.
pub fn run_stream(
    g: &Graph,
    ops: &[OpRecord],
    batch: usize,
    rec: &mut Recorder,
    h: &mut impl Hasher,
) -> Result<()> {
    let mut i = 0;
    let mut buf: Vec<EdgeOp> = Vec::with_capacity(batch);
    while i < ops.len() {
        let r = &ops[i];
        if let Some(op) = mutation(r) {
            buf.clear();
            buf.push(op);
            let mut j = i + 1;
            while buf.len() < batch && j < ops.len() {
                match mutation(&ops[j]) {
                    Some(o) => buf.push(o),
                    None => break,
                }
                j += 1;
            }
            let class = class_of(&buf[0]);
            let timed = buf.len() > 1 || rec.should_sample(class);
            let t = timed.then(Instant::now);
            let ts = if buf.len() == 1 {
                match op {
                    EdgeOp::Insert(u, v) => g.insert_edge(u, v)?,
                    EdgeOp::Delete(u, v) => g.delete_edge(u, v)?,
                }
            } else {
                g.apply_batch(&buf)?
            };
            let d = t.map(|t| t.elapsed());
            let ins = buf.iter().filter(|o| o.is_insert()).count() as u64;
            let del = buf.len() as u64 - ins;
            if ins > 0 {
                rec.record(OpClass::Insert, ins, ins, d.filter(|_| class == OpClass::Insert));
            }
            if del > 0 {
                rec.record(OpClass::Delete, del, del, d.filter(|_| class == OpClass::Delete));
            }
            h.write_u64(buf.len() as u64);
            let _ = ts;
            i = j;
            continue;
        }
        match r.kind {
            OpKind::SearchEdge => {
                let v = r.v.ok_or_else(|| Error::InvalidArgument("search without target".into()))?;
                let t = rec.should_sample(OpClass::Search).then(Instant::now);
                let hit = g.begin_read().search_edge(r.u, v);
                rec.record(OpClass::Search, 1, 1, t.map(|t| t.elapsed()));
                h.write_u8(hit as u8);
            }
            OpKind::ScanNbr => {
                let t = rec.should_sample(OpClass::Scan).then(Instant::now);
                let mut sum = 0u64;
                let n = g.begin_read().scan_neighbors(r.u, |v| sum = sum.wrapping_add(v));
                rec.record(OpClass::Scan, 1, n as u64, t.map(|t| t.elapsed()));
                h.write_u64(n as u64);
                h.write_u64(sum);
            }
            OpKind::InsVtx => {
                let made = g.insert_vertex(r.u);
                rec.record(OpClass::Insert, 1, 0, None);
                h.write_u8(made as u8);
            }
            OpKind::InsEdge | OpKind::DelEdge => unreachable!("handled above"),
        }
        i += 1;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{CcMode, ContainerKind};
    use crate::workload::{EdgeList, ScanSelection};

    fn sample_workload() -> WorkloadSpec {
        let edges: Vec<(u64, u64)> = (0..2000u64).map(|i| (i % 97, (i * 31) % 500)).collect();
        let list = EdgeList {
            edges,
            ..Default::default()
        };
        WorkloadSpec::from_edges(list, true, 7, ScanSelection::TopDegree)
    }

    #[test]
    fn partition_covers_stream() {
        let w = sample_workload();
        let p = partition(&w.inserts, 3);
        assert_eq!(p.len(), 3);
        assert_eq!(p.concat(), w.inserts);
        assert_eq!(partition(&[], 2), vec![Vec::new(), Vec::new()]);
    }

    #[test]
    fn single_thread_runs_replay() {
        let w = sample_workload();
        let cfg = BenchConfig::default();
        let a = run_benchmark(&cfg, &w).unwrap();
        let b = run_benchmark(&cfg, &w).unwrap();
        assert!(a.valid);
        assert_eq!(a.outcome_digest, b.outcome_digest);
        assert_eq!(a.final_ts, w.inserts.len() as u64);
        let ins = a.class(OpClass::Insert).unwrap();
        assert_eq!(ins.ops, w.inserts.len() as u64);
        assert_eq!(
            ins.p50 > 0,
            w.inserts.len() >= 100,
            "one sample per 100 operations"
        );
        assert_eq!(a.class(OpClass::Search).unwrap().ops, w.searches.len() as u64);
    }

    #[test]
    fn mixed_run_reports_both_sides() {
        let w = sample_workload();
        let cfg = BenchConfig {
            graph: GraphConfig::new(ContainerKind::Segsl, CcMode::Fine),
            readers: 3,
            writers: 1,
            ..Default::default()
        };
        let r = run_benchmark(&cfg, &w).unwrap();
        assert!(r.valid, "{:?}", r.failures);
        assert_eq!(r.readers, 3);
        assert!(r.class(OpClass::Insert).is_some());
        assert!(r.class(OpClass::Search).is_some());
    }

    #[test]
    fn batches_commit_once_per_batch() {
        let w = sample_workload();
        let cfg = BenchConfig {
            graph: GraphConfig::new(ContainerKind::Cow, CcMode::Coarse),
            batch_size: 64,
            classes: vec![OpClass::Insert],
            ..Default::default()
        };
        let r = run_benchmark(&cfg, &w).unwrap();
        assert_eq!(r.final_ts, w.inserts.len().div_ceil(64) as u64);
    }

    #[test]
    fn config_errors() {
        let w = sample_workload();
        let mut cfg = BenchConfig::default();
        cfg.graph.cc = CcMode::Coarse;
        assert!(matches!(run_benchmark(&cfg, &w), Err(Error::Config(_))));
        let cfg = BenchConfig {
            readers: 2,
            ..Default::default()
        };
        assert!(matches!(run_benchmark(&cfg, &w), Err(Error::Config(_))));
    }
}
