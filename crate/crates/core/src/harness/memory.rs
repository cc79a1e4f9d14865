//! Structural memory accounting and best-effort resident-set sampling.

use serde::Serialize;

use crate::csr::Csr;
use crate::engine::MemoryStats;
use crate::graph::{Graph, GraphConfig};

/// Structural byte breakdown of a quiesced graph.
pub fn memory_account(graph: &Graph) -> MemoryStats {
    graph.memory()
}

/// Resident set size of this process, where the platform exposes it.
pub fn resident_set_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmRSS:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

#[derive(Clone, Debug, Serialize)]
pub struct MemoryReport {
    pub config: GraphConfig,
    pub dgs: MemoryStats,
    pub dgs_total_bytes: usize,
    pub csr_bytes: usize,
    /// `dgs_total_bytes / csr_bytes`.
    pub ratio_vs_csr: f64,
    pub rss_bytes: Option<u64>,
}

pub fn compare_with_csr(graph: &Graph, csr: &Csr) -> MemoryReport {
    let dgs = memory_account(graph);
    let total = dgs.total_bytes();
    let csr_bytes = csr.memory_bytes();
    MemoryReport {
        config: graph.config().clone(),
        dgs,
        dgs_total_bytes: total,
        csr_bytes,
        ratio_vs_csr: if csr_bytes == 0 { f64::INFINITY } else { total as f64 / csr_bytes as f64 },
        rss_bytes: resident_set_bytes(),
    }
}
