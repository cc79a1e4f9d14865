//! Benchmark harness: workload execution, metrics, memory accounting,
//! reporting and the correctness oracle.

pub mod executor;
pub mod memory;
pub mod metrics;
pub mod oracle;
pub mod report;

pub use executor::{run_benchmark, BenchConfig, MetricsReport};
pub use memory::{compare_with_csr, memory_account, resident_set_bytes, MemoryReport};
pub use metrics::{cost_breakdown, latency_percentile, ClassMetrics, CostBreakdown, OpClass, Recorder};
pub use oracle::{oracle_check, Divergence, ReferenceModel};

use serde::Serialize;

use crate::types::CcMode;
use crate::workload::WorkloadSpec;
use crate::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct CcComparison {
    pub with_cc: MetricsReport,
    pub without_cc: MetricsReport,
    pub breakdown: Vec<CostBreakdown>,
}

/// Run the same workload under `cfg` and again with CC off (same container),
/// then attribute the throughput gap to concurrency control.
pub fn compare_cc(cfg: &BenchConfig, w: &WorkloadSpec) -> Result<CcComparison> {
    if cfg.graph.cc == CcMode::Off {
        return Err(Error::Config("the comparison run needs a CC mode other than off".into()));
    }
    let with_cc = run_benchmark(cfg, w)?;
    let mut off = cfg.clone();
    off.graph.cc = CcMode::Off;
    let without_cc = run_benchmark(&off, w)?;
    for r in [&with_cc, &without_cc] {
        if !r.valid {
            return Err(Error::WorkerFailed(r.failures.join("; ")));
        }
    }
    let breakdown = cost_breakdown(&with_cc.classes, &without_cc.classes)?;
    Ok(CcComparison {
        with_cc,
        without_cc,
        breakdown,
    })
}

/// Result of a concurrent run checked against the reference model.
#[derive(Clone, Debug, Serialize)]
pub struct VerifyOutcome {
    pub commits: usize,
    pub final_ts: u64,
    /// Reader observations compared against the model at their start time.
    pub reads_checked: usize,
    pub divergence: Option<String>,
}

impl VerifyOutcome {
    pub fn passed(&self) -> bool {
        self.divergence.is_none()
    }
}

/// Replay the insert stream with `cfg.threads` writers (and, outside off
/// mode, `cfg.readers` concurrent readers recording what they see), then
/// rebuild the reference model from the commit log and compare every
/// vertex of the final state and every reader observation.
pub fn verify_concurrent(cfg: &BenchConfig, w: &WorkloadSpec) -> Result<VerifyOutcome> {
    use crate::graph::Graph;
    use crate::types::{EdgeOp, Timestamp, VertexId};
    use crate::workload::OpKind;
    use std::sync::atomic::{AtomicBool, Ordering};

    cfg.validate()?;
    let g = Graph::new(cfg.graph.clone())?;
    g.load_edges(&w.initial_edges)?;
    let mut model = ReferenceModel::with_initial(&w.initial_edges);
    let writers = executor::partition(&w.inserts, cfg.threads.max(cfg.writers));
    let readers = if cfg.graph.cc == CcMode::Off { 0 } else { cfg.readers };
    let probe: Vec<VertexId> = {
        let mut p: Vec<VertexId> = w.inserts.iter().map(|r| r.u).collect();
        p.sort_unstable();
        p.dedup();
        p
    };
    let done = AtomicBool::new(false);

    type Obs = Vec<(Timestamp, VertexId, Vec<VertexId>)>;
    let (logs, observations) = std::thread::scope(|s| {
        let wh: Vec<_> = writers
            .iter()
            .map(|part| {
                let g = &g;
                s.spawn(move || -> Result<Vec<(Timestamp, Vec<EdgeOp>)>> {
                    let mut log = Vec::new();
                    let ops: Vec<EdgeOp> = part
                        .iter()
                        .filter_map(|r| match (r.kind, r.v) {
                            (OpKind::InsEdge, Some(v)) => Some(EdgeOp::Insert(r.u, v)),
                            (OpKind::DelEdge, Some(v)) => Some(EdgeOp::Delete(r.u, v)),
                            _ => None,
                        })
                        .collect();
                    for chunk in ops.chunks(cfg.batch_size) {
                        let ts = if chunk.len() == 1 {
                            let mut t = g.begin_write([chunk[0].source(), chunk[0].target()])?;
                            match chunk[0] {
                                EdgeOp::Insert(u, v) => t.insert_edge(u, v)?,
                                EdgeOp::Delete(u, v) => t.delete_edge(u, v)?,
                            }
                            t.commit()?
                        } else {
                            g.apply_batch(chunk)?
                        };
                        log.push((ts, chunk.to_vec()));
                    }
                    Ok(log)
                })
            })
            .collect();
        let rh: Vec<_> = (0..readers)
            .map(|i| {
                let (g, probe, done) = (&g, &probe, &done);
                s.spawn(move || -> Obs {
                    let mut obs = Vec::new();
                    let mut k = i;
                    while !done.load(Ordering::Acquire) && !probe.is_empty() {
                        let r = g.begin_read();
                        let u = probe[k % probe.len()];
                        let mut n = r.neighbors(u);
                        if !r.graph().is_sorted() {
                            n.sort_unstable();
                        }
                        obs.push((r.start_ts(), u, n));
                        k += readers.max(1);
                        if obs.len() >= 10_000 {
                            break;
                        }
                        std::thread::yield_now();
                    }
                    obs
                })
            })
            .collect();
        let logs: Vec<_> = wh
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::WorkerFailed("writer panicked".into()))))
            .collect();
        done.store(true, Ordering::Release);
        let obs: Vec<Obs> = rh.into_iter().map(|h| h.join().unwrap_or_default()).collect();
        (logs, obs)
    });

    let mut log = Vec::new();
    for l in logs {
        log.extend(l?);
    }
    let commits = log.len();
    model.replay(log)?;
    let final_ts = g.now();
    let mut divergence = None;
    if model.last_ts() != final_ts {
        divergence = Some(format!(
            "clock at {} but the commit log ends at {}",
            final_ts,
            model.last_ts()
        ));
    }
    if divergence.is_none() {
        let r = g.begin_read();
        if let Err(d) = oracle_check(&r, &model, r.start_ts()) {
            divergence = Some(d.to_string());
        }
    }
    let mut reads_checked = 0;
    for (at, u, got) in observations.into_iter().flatten() {
        if divergence.is_some() {
            break;
        }
        reads_checked += 1;
        let expected = model.neighbors_at(u, at);
        if expected != got {
            divergence = Some(
                Divergence {
                    vertex: u,
                    at,
                    expected,
                    got,
                }
                .to_string(),
            );
        }
    }
    Ok(VerifyOutcome {
        commits,
        final_ts: final_ts.0,
        reads_checked,
        divergence,
    })
}
