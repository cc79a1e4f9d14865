//! CSV and JSON output.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::executor::MetricsReport;
use super::metrics::ClassMetrics;
use crate::types::VertexId;
use crate::Result;

pub const METRICS_FILE: &str = "metrics.csv";
pub const RUN_MANIFEST_FILE: &str = "manifest.json";

/// Header `class,ops,seconds,throughput,p50,p95,p99,max,mean`, one row per class.
pub fn write_metrics_csv<W: Write>(w: W, rows: &[ClassMetrics]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    if rows.is_empty() {
        out.write_record(["class", "ops", "seconds", "throughput", "p50", "p95", "p99", "max", "mean"])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_manifest<W: Write>(w: W, report: &MetricsReport) -> Result<()> {
    serde_json::to_writer_pretty(w, report)?;
    Ok(())
}

/// `metrics.csv` and `manifest.json` under `dir`.
pub fn write_run(dir: &Path, report: &MetricsReport) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_metrics_csv(std::fs::File::create(dir.join(METRICS_FILE))?, &report.classes)?;
    write_manifest(
        std::io::BufWriter::new(std::fs::File::create(dir.join(RUN_MANIFEST_FILE))?),
        report,
    )?;
    Ok(())
}

/// Per-vertex analytics output with header `vertex,value`.
pub fn write_vertex_values<W: Write, T: Serialize>(w: W, values: &[(VertexId, T)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["vertex", "value"])?;
    for (v, x) in values {
        out.serialize((v, x))?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::metrics::OpClass;

    #[test]
    fn metrics_csv_layout() {
        let mut buf = Vec::new();
        let row = ClassMetrics::new(OpClass::Insert, 1000, 0.5, &[1, 2, 3]);
        write_metrics_csv(&mut buf, &[row]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let mut lines = s.lines();
        assert_eq!(lines.next().unwrap(), "class,ops,seconds,throughput,p50,p95,p99,max,mean");
        assert_eq!(lines.next().unwrap(), "insert,1000,0.5,2000.0,2,3,3,3,2.0");
        let mut empty = Vec::new();
        write_metrics_csv(&mut empty, &[]).unwrap();
        assert!(String::from_utf8(empty).unwrap().starts_with("class,ops"));
    }

    #[test]
    fn vertex_values_layout() {
        let mut buf = Vec::new();
        write_vertex_values(&mut buf, &[(0, 1u64), (1, u64::MAX)]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("vertex,value\n0,1\n1,{}\n", u64::MAX));
    }
}
