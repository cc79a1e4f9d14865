use std::path::Path;
use std::process::Command;

fn dgs(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_dgs")).args(args).output().expect("run dgs")
}

fn write_graph(path: &Path) {
    let mut s = String::new();
    for i in 0..3000u64 {
        s.push_str(&format!("{} {}\n", (i * 7) % 301, (i * 13 + 5) % 401));
    }
    std::fs::write(path, s).unwrap();
}

#[test]
fn generate_bench_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let el = dir.path().join("g.el");
    write_graph(&el);
    let wl = dir.path().join("wl");
    let o = dgs(&["generate", "--input", el.to_str().unwrap(), "--out", wl.to_str().unwrap(), "--seed", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["initial.el", "insert.ops", "search.ops", "scan.ops", "workload.json"] {
        assert!(wl.join(f).exists(), "{f}");
    }

    let out = dir.path().join("run");
    let o = dgs(&[
        "bench", "--workload", wl.to_str().unwrap(), "--out", out.to_str().unwrap(),
        "--container", "segsl", "--threads", "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(csv.starts_with("class,ops,seconds,throughput,p50,p95,p99,max,mean\n"));
    assert_eq!(csv.lines().count(), 4);
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["graph"]["container"], "segsl");
    assert_eq!(manifest["config"]["threads"], 2);
    assert_eq!(manifest["valid"], true);

    let o = dgs(&["verify", "--workload", wl.to_str().unwrap(), "--container", "unsorted", "--threads", "4", "--readers", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["divergence"], serde_json::Value::Null);

    let o = dgs(&[
        "bench", "--workload", wl.to_str().unwrap(), "--out", dir.path().join("cmp").to_str().unwrap(),
        "--container", "cow", "--cc", "coarse", "--compare-cc",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("scan amplification="));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let el = dir.path().join("g.el");
    write_graph(&el);
    let o = dgs(&["memory", "--input", el.to_str().unwrap(), "--container", "pma", "--cc", "coarse"]);
    assert_eq!(o.status.code(), Some(2));
    let o = dgs(&["memory", "--input", el.to_str().unwrap(), "--block-size", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let o = dgs(&["analytics", "--input", el.to_str().unwrap(), "--algo", "tc", "--container", "unsorted"]);
    assert_eq!(o.status.code(), Some(2), "triangle counting needs sorted scans");
    let o = dgs(&["memory", "--input", dir.path().join("missing").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn analytics_backends_agree() {
    let dir = tempfile::tempdir().unwrap();
    let el = dir.path().join("g.el");
    write_graph(&el);
    let run = |backend: &str, algo: &str| {
        let o = dgs(&["analytics", "--input", el.to_str().unwrap(), "--algo", algo, "--backend", backend, "--undirected"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        o.stdout
    };
    for algo in ["bfs", "sssp", "wcc", "tc"] {
        assert_eq!(run("csr", algo), run("dgs", algo), "{algo}");
    }
    let pr = String::from_utf8(run("dgs", "pr")).unwrap();
    assert!(pr.starts_with("vertex,value\n0,"));
    let o = dgs(&["memory", "--input", el.to_str().unwrap(), "--container", "cow", "--cc", "coarse"]);
    let m: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(m["ratio_vs_csr"].as_f64().unwrap() > 1.0);
}
