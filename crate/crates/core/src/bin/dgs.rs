use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use dgs_core::analytics;
use dgs_core::csr::Csr;
use dgs_core::harness::{self, report, BenchConfig, OpClass};
use dgs_core::types::{CcMode, ContainerKind, VertexIndexKind};
use dgs_core::workload::{self, read_edge_list, ScanSelection, WorkloadSpec};
use dgs_core::{Error, Graph, GraphConfig};

/// Dynamic graph storage workbench.
#[derive(Parser)]
#[command(name = "dgs", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Split an edge list into initial graph, insert, search and scan streams.
    Generate(GenerateArgs),
    /// Write uniform synthetic neighbor sets as an edge list.
    Synthetic(SyntheticArgs),
    /// Run a saved workload and write metrics.csv and manifest.json.
    Bench(BenchArgs),
    /// Run an analytic over an edge list.
    Analytics(AnalyticsArgs),
    /// Replay the insert stream concurrently and check it against the reference model.
    Verify(VerifyArgs),
    /// Print the structural memory breakdown of a loaded edge list.
    Memory(MemoryArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Third column is a timestamp; keep input order instead of shuffling.
    #[arg(long)]
    timestamped: bool,
    /// Store every edge in both directions.
    #[arg(long)]
    undirected: bool,
    /// Sample scan targets proportionally to degree instead of taking the top 20%.
    #[arg(long)]
    degree_weighted: bool,
}

#[derive(Args)]
struct SyntheticArgs {
    #[arg(long)]
    set_size: usize,
    #[arg(long)]
    total_bytes: u64,
    #[arg(long, default_value_t = 8)]
    word_bytes: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct GraphArgs {
    #[arg(long, default_value = "sorted")]
    container: ContainerKind,
    #[arg(long, default_value = "fine")]
    cc: CcMode,
    #[arg(long, default_value = "dense")]
    vertex_index: VertexIndexKind,
    #[arg(long, default_value_t = 256)]
    block_size: usize,
    #[arg(long, default_value_t = 256)]
    adaptive_threshold: usize,
    #[arg(long, default_value_t = 16)]
    bloom_ratio: usize,
    /// Delta-compress PMA segments.
    #[arg(long)]
    compress: bool,
    #[arg(long, default_value_t = 8)]
    batch_threads: usize,
}

impl GraphArgs {
    fn config(&self) -> GraphConfig {
        GraphConfig {
            container: self.container,
            cc: self.cc,
            vertex_index: self.vertex_index,
            block_size: self.block_size,
            adaptive_threshold: self.adaptive_threshold,
            bloom_ratio: self.bloom_ratio,
            compress: self.compress,
            batch_threads: self.batch_threads,
            ..GraphConfig::default()
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value_t = 0)]
    readers: usize,
    #[arg(long, default_value_t = 0)]
    writers: usize,
    #[arg(long, default_value_t = 1)]
    batch_size: usize,
    #[arg(long, default_value_t = 100)]
    window: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Phases to run in order.
    #[arg(long, value_delimiter = ',', default_value = "insert,search,scan")]
    classes: Vec<OpClass>,
    /// Percentage of each neighbor set given extra versions before measuring.
    #[arg(long, default_value_t = 0.0)]
    inject_pct: f64,
    #[arg(long, default_value_t = 3)]
    versions_per_key: usize,
}

impl RunArgs {
    fn config(&self) -> BenchConfig {
        BenchConfig {
            graph: self.graph.config(),
            threads: self.threads,
            readers: self.readers,
            writers: self.writers,
            batch_size: self.batch_size,
            window: self.window,
            seed: self.seed,
            classes: self.classes.clone(),
            inject_pct: self.inject_pct,
            versions_per_key: self.versions_per_key,
        }
    }
}

#[derive(Args)]
struct BenchArgs {
    /// Directory written by `generate`.
    #[arg(long)]
    workload: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    run: RunArgs,
    /// Also run with CC off and report the cost breakdown.
    #[arg(long)]
    compare_cc: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Pr,
    Bfs,
    Sssp,
    Wcc,
    Tc,
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    /// Static CSR snapshot.
    Csr,
    /// A dynamic store built with the graph flags.
    Dgs,
}

#[derive(Args)]
struct AnalyticsArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    algo: Algo,
    #[arg(long, value_enum, default_value = "dgs")]
    backend: Backend,
    #[arg(long, default_value_t = 0)]
    source: u64,
    #[arg(long)]
    timestamped: bool,
    #[arg(long)]
    undirected: bool,
    /// Per-vertex CSV; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    graph: GraphArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    workload: PathBuf,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct MemoryArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    timestamped: bool,
    #[arg(long)]
    undirected: bool,
    #[command(flatten)]
    graph: GraphArgs,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let config = e
                .downcast_ref::<Error>()
                .is_some_and(|e| matches!(e, Error::Config(_) | Error::Unsupported(_)));
            ExitCode::from(if config { 2 } else { 1 })
        }
    }
}

fn run(cmd: Cmd) -> anyhow::Result<ExitCode> {
    match cmd {
        Cmd::Generate(a) => generate(a),
        Cmd::Synthetic(a) => synthetic(a),
        Cmd::Bench(a) => bench(a),
        Cmd::Analytics(a) => run_analytics(a),
        Cmd::Verify(a) => verify(a),
        Cmd::Memory(a) => memory(a),
    }
}

fn load_edges(path: &Path, timestamped: bool, undirected: bool) -> anyhow::Result<workload::EdgeList> {
    let mut list = read_edge_list(path, timestamped).with_context(|| format!("reading {}", path.display()))?;
    if undirected {
        list.symmetrize();
    }
    Ok(list)
}

fn generate(a: GenerateArgs) -> anyhow::Result<ExitCode> {
    let list = read_edge_list(&a.input, a.timestamped).with_context(|| format!("reading {}", a.input.display()))?;
    let how = if a.degree_weighted {
        ScanSelection::DegreeWeighted
    } else {
        ScanSelection::TopDegree
    };
    let spec = WorkloadSpec::from_edges(list, !a.undirected, a.seed, how);
    spec.save(&a.out)?;
    log::info!(
        "{} initial edges, {} inserts, {} searches, {} scans",
        spec.initial_edges.len(),
        spec.inserts.len(),
        spec.searches.len(),
        spec.scans.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn synthetic(a: SyntheticArgs) -> anyhow::Result<ExitCode> {
    let sets = workload::gen_synthetic(a.set_size, a.total_bytes, a.word_bytes, a.seed)?;
    let edges: Vec<(u64, u64)> = sets
        .iter()
        .enumerate()
        .flat_map(|(u, s)| s.iter().map(move |&v| (u as u64, v)))
        .collect();
    workload::write_edge_list(BufWriter::new(File::create(&a.out)?), &edges)?;
    Ok(ExitCode::SUCCESS)
}

fn bench(a: BenchArgs) -> anyhow::Result<ExitCode> {
    let cfg = a.run.config();
    cfg.validate()?;
    let spec = WorkloadSpec::load(&a.workload)?;
    if a.compare_cc {
        let c = harness::compare_cc(&cfg, &spec)?;
        report::write_run(&a.out.join("cc"), &c.with_cc)?;
        report::write_run(&a.out.join("off"), &c.without_cc)?;
        serde_json::to_writer_pretty(File::create(a.out.join("breakdown.json"))?, &c.breakdown)?;
        for b in &c.breakdown {
            println!("{} amplification={:.3} t_cc_share={:.3}", b.class.name(), b.amplification, b.t_cc_share);
        }
        return Ok(ExitCode::SUCCESS);
    }
    let r = harness::run_benchmark(&cfg, &spec)?;
    report::write_run(&a.out, &r)?;
    report::write_metrics_csv(std::io::stdout().lock(), &r.classes)?;
    if !r.valid {
        eprintln!("run invalid: {}", r.failures.join("; "));
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn run_analytics(a: AnalyticsArgs) -> anyhow::Result<ExitCode> {
    let list = load_edges(&a.input, a.timestamped, a.undirected)?;
    let mut out: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    match a.backend {
        Backend::Csr => {
            let csr = match list.weighted() {
                Some(w) => Csr::build_weighted(list.num_vertices(), &w)?,
                None => Csr::build(list.num_vertices(), &list.edges)?,
            };
            emit(&csr, a.algo, a.source, &mut out)
        }
        Backend::Dgs => {
            let cfg = a.graph.config();
            let g = Graph::new(cfg)?;
            g.load_edges(&list.edges)?;
            let r = g.begin_read();
            r.flatten();
            emit(&r, a.algo, a.source, &mut out)
        }
    }?;
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn emit<V: dgs_core::view::GraphView>(v: &V, algo: Algo, source: u64, out: &mut dyn Write) -> anyhow::Result<()> {
    let rows = |xs: Vec<u64>| xs.into_iter().enumerate().map(|(i, x)| (i as u64, x)).collect::<Vec<_>>();
    match algo {
        Algo::Pr => {
            let pr = analytics::pagerank(v, analytics::DAMPING, analytics::PR_ITERS);
            let rows: Vec<_> = pr.into_iter().enumerate().map(|(i, x)| (i as u64, x)).collect();
            report::write_vertex_values(out, &rows)?;
        }
        Algo::Bfs => report::write_vertex_values(out, &rows(analytics::bfs(v, source)?))?,
        Algo::Sssp => report::write_vertex_values(out, &rows(analytics::sssp(v, source)?))?,
        Algo::Wcc => report::write_vertex_values(out, &rows(analytics::wcc(v)))?,
        Algo::Tc => writeln!(out, "{}", analytics::triangle_count(v)?)?,
    }
    Ok(())
}

fn verify(a: VerifyArgs) -> anyhow::Result<ExitCode> {
    let mut cfg = a.run.config();
    if cfg.readers > 0 && cfg.writers == 0 {
        cfg.writers = cfg.threads;
    }
    let spec = WorkloadSpec::load(&a.workload)?;
    let out = harness::verify_concurrent(&cfg, &spec)?;
    println!("{}", serde_json::to_string_pretty(&out)?);
    if let Some(d) = &out.divergence {
        eprintln!("divergence: {d}");
        return Ok(ExitCode::from(1));
    }
    if let Err(e) = Graph::new(cfg.graph.clone()).and_then(|g| {
        g.load_edges(&spec.initial_edges)?;
        g.check().map_err(Error::Corrupt)
    }) {
        bail!(e);
    }
    Ok(ExitCode::SUCCESS)
}

fn memory(a: MemoryArgs) -> anyhow::Result<ExitCode> {
    let list = load_edges(&a.input, a.timestamped, a.undirected)?;
    let g = Graph::new(a.graph.config())?;
    g.load_edges(&list.edges)?;
    let csr = Csr::build(list.num_vertices(), &list.edges)?;
    let r = harness::compare_with_csr(&g, &csr);
    println!("{}", serde_json::to_string_pretty(&r)?);
    Ok(ExitCode::SUCCESS)
}
