//! Throughput and latency bookkeeping.

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Operation classes reported separately.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpClass {
    Insert,
    Delete,
    Search,
    Scan,
}

impl OpClass {
    pub fn name(self) -> &'static str {
        match self {
            OpClass::Insert => "insert",
            OpClass::Delete => "delete",
            OpClass::Search => "search",
            OpClass::Scan => "scan",
        }
    }
}

impl std::str::FromStr for OpClass {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "insert" => Ok(OpClass::Insert),
            "delete" => Ok(OpClass::Delete),
            "search" => Ok(OpClass::Search),
            "scan" => Ok(OpClass::Scan),
            _ => Err(format!("unknown operation class `{s}`")),
        }
    }
}

/// Nearest-rank percentile: the value at 1-based rank `ceil(p/100 * n)` of
/// the sorted samples (rank clamped to `[1, n]`).
pub fn latency_percentile(samples: &[u64], p: f64) -> Result<u64> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("percentile {p} outside [0, 100]")));
    }
    let mut s = samples.to_vec();
    s.sort_unstable();
    Ok(s[nearest_rank(s.len(), p) - 1])
}

fn nearest_rank(n: usize, p: f64) -> usize {
    ((p / 100.0 * n as f64).ceil() as usize).clamp(1, n)
}

/// Per-thread counters; merged after the run so workers never share them.
#[derive(Clone, Debug, Default)]
pub struct Recorder {
    window: u64,
    classes: BTreeMap<OpClass, ClassRecord>,
}

#[derive(Clone, Debug, Default)]
pub struct ClassRecord {
    /// Edges processed: inserts and searches count one per operation, scans
    /// count each visited neighbor.
    pub ops: u64,
    /// Operations issued (one per record, one per batch element).
    pub requests: u64,
    /// Nanoseconds per sampled operation.
    pub samples: Vec<u64>,
    pub busy: Duration,
}

impl Recorder {
    pub fn new(window: u64) -> Self {
        Recorder {
            window: window.max(1),
            classes: BTreeMap::new(),
        }
    }

    /// Whether the next request of `class` should be timed: one sample per
    /// `window` requests.
    #[inline]
    pub fn should_sample(&self, class: OpClass) -> bool {
        let done = self.classes.get(&class).map_or(0, |c| c.requests);
        (done + 1) % self.window == 0
    }

    /// Account `requests` operations that processed `edges` edges.
    #[inline]
    pub fn record(&mut self, class: OpClass, requests: u64, edges: u64, sample: Option<Duration>) {
        let c = self.classes.entry(class).or_default();
        c.requests += requests;
        c.ops += edges;
        if let Some(d) = sample {
            c.samples.push((d.as_nanos() as u64 / requests.max(1)).max(1));
        }
    }

    pub fn add_busy(&mut self, class: OpClass, d: Duration) {
        self.classes.entry(class).or_default().busy += d;
    }

    pub fn merge(&mut self, other: Recorder) {
        for (k, v) in other.classes {
            let c = self.classes.entry(k).or_default();
            c.ops += v.ops;
            c.requests += v.requests;
            c.samples.extend(v.samples);
            c.busy = c.busy.max(v.busy);
        }
    }

    pub fn class(&self, class: OpClass) -> Option<&ClassRecord> {
        self.classes.get(&class)
    }

    /// One report row per class; `wall` is the measured window of each class.
    pub fn summarize(&self, wall: &BTreeMap<OpClass, Duration>) -> Vec<ClassMetrics> {
        self.classes
            .iter()
            .map(|(&class, c)| {
                let seconds = wall.get(&class).copied().unwrap_or(c.busy).as_secs_f64();
                ClassMetrics::new(class, c.ops, seconds, &c.samples)
            })
            .collect()
    }
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: OpClass,
    pub ops: u64,
    pub seconds: f64,
    /// `ops / seconds`.
    pub throughput: f64,
    pub p50: u64,
    pub p95: u64,
    pub p99: u64,
    pub max: u64,
    pub mean: f64,
}

impl ClassMetrics {
    pub fn new(class: OpClass, ops: u64, seconds: f64, samples: &[u64]) -> Self {
        let pct = |p| latency_percentile(samples, p).unwrap_or(0);
        let mean = if samples.is_empty() {
            0.0
        } else {
            samples.iter().sum::<u64>() as f64 / samples.len() as f64
        };
        ClassMetrics {
            class,
            ops,
            seconds,
            throughput: if seconds > 0.0 { ops as f64 / seconds } else { 0.0 },
            p50: pct(50.0),
            p95: pct(95.0),
            p99: pct(99.0),
            max: samples.iter().copied().max().unwrap_or(0),
            mean,
        }
    }
}

/// Measured cost of concurrency control for one operation class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub class: OpClass,
    /// `throughput(no CC) / throughput(with CC)`; 1.0 is optimal.
    pub amplification: f64,
    /// Fraction of the with-CC time attributable to coordination,
    /// `1 - 1 / amplification`.
    pub t_cc_share: f64,
}

/// Compare two runs of the same workload, one with and one without CC.
pub fn cost_breakdown(with_cc: &[ClassMetrics], no_cc: &[ClassMetrics]) -> Result<Vec<CostBreakdown>> {
    let mut out = Vec::new();
    for w in with_cc {
        let Some(o) = no_cc.iter().find(|o| o.class == w.class) else {
            return Err(Error::WorkloadMismatch(format!(
                "class {} missing from the run without CC",
                w.class.name()
            )));
        };
        if o.ops != w.ops {
            return Err(Error::WorkloadMismatch(format!(
                "class {}: {} vs {} edges processed",
                w.class.name(),
                w.ops,
                o.ops
            )));
        }
        if w.throughput <= 0.0 {
            return Err(Error::WorkloadMismatch(format!(
                "class {} has zero throughput",
                w.class.name()
            )));
        }
        let amplification = o.throughput / w.throughput;
        out.push(CostBreakdown {
            class: w.class,
            amplification,
            t_cc_share: 1.0 - 1.0 / amplification,
        });
    }
    if no_cc.len() != with_cc.len() {
        return Err(Error::WorkloadMismatch("runs report different classes".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_examples() {
        let s: Vec<u64> = (1..=100).collect();
        assert_eq!(latency_percentile(&s, 95.0).unwrap(), 95);
        assert_eq!(latency_percentile(&s, 50.0).unwrap(), 50);
        assert_eq!(latency_percentile(&s, 100.0).unwrap(), 100);
        assert_eq!(latency_percentile(&s, 0.0).unwrap(), 1);
        assert_eq!(latency_percentile(&[42], 37.0).unwrap(), 42);
        assert_eq!(latency_percentile(&[5, 5, 5], 99.0).unwrap(), 5);
        assert!(matches!(latency_percentile(&[], 50.0), Err(Error::EmptySamples)));
    }

    #[test]
    fn throughput_arithmetic() {
        let m = ClassMetrics::new(OpClass::Insert, 1000, 0.5, &[]);
        assert_eq!(m.throughput, 2000.0);
    }

    #[test]
    fn sampling_window() {
        let mut r = Recorder::new(100);
        let mut sampled = 0;
        for _ in 0..1000 {
            let s = r.should_sample(OpClass::Search);
            sampled += s as usize;
            r.record(OpClass::Search, 1, 1, s.then(|| Duration::from_nanos(10)));
        }
        assert_eq!(sampled, 10);
        assert_eq!(r.class(OpClass::Search).unwrap().samples.len(), 10);
    }

    #[test]
    fn cost_examples() {
        let row = |t: f64| ClassMetrics::new(OpClass::Scan, 100, 100.0 / t, &[]);
        let c = cost_breakdown(&[row(100.0)], &[row(100.0)]).unwrap();
        assert!((c[0].amplification - 1.0).abs() < 1e-12);
        assert!(c[0].t_cc_share.abs() < 1e-12);
        let c = cost_breakdown(&[row(50.0)], &[row(100.0)]).unwrap();
        assert!((c[0].amplification - 2.0).abs() < 1e-12);
        assert!((c[0].t_cc_share - 0.5).abs() < 1e-12);
        let other = ClassMetrics::new(OpClass::Scan, 99, 1.0, &[]);
        assert!(matches!(
            cost_breakdown(&[row(50.0)], &[other]),
            Err(Error::WorkloadMismatch(_))
        ));
    }
}
