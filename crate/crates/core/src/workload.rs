//! Workload generation and the on-disk formats.
//!
//! Edge lists are UTF-8 text with one edge per line, `u v` or `u v w`
//! separated by single spaces; lines starting with `#` are comments. With
//! the timestamped flag each line carries a leading timestamp column that
//! fixes stream order. Operation streams use one record per line:
//! `I u v`, `D u v`, `S u v`, `N u`, `V u`.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::rng::SplitMix64;
use crate::types::VertexId;
use crate::{Error, Result};

/// Element IDs of synthetic sets are drawn from `[0, 2^22)`.
pub const SYNTHETIC_ID_SPACE: u64 = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OpKind {
    InsEdge,
    DelEdge,
    SearchEdge,
    ScanNbr,
    InsVtx,
}

impl OpKind {
    fn tag(self) -> char {
        match self {
            OpKind::InsEdge => 'I',
            OpKind::DelEdge => 'D',
            OpKind::SearchEdge => 'S',
            OpKind::ScanNbr => 'N',
            OpKind::InsVtx => 'V',
        }
    }

    pub fn is_edge_op(self) -> bool {
        matches!(self, OpKind::InsEdge | OpKind::DelEdge | OpKind::SearchEdge)
    }
}

/// One operation of a micro stream; `v` is present iff the kind names an
/// edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OpRecord {
    pub kind: OpKind,
    pub u: VertexId,
    pub v: Option<VertexId>,
}

impl OpRecord {
    pub fn edge(kind: OpKind, u: VertexId, v: VertexId) -> Self {
        debug_assert!(kind.is_edge_op());
        OpRecord { kind, u, v: Some(v) }
    }

    pub fn vertex(kind: OpKind, u: VertexId) -> Self {
        debug_assert!(!kind.is_edge_op());
        OpRecord { kind, u, v: None }
    }
}

impl fmt::Display for OpRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.v {
            Some(v) => write!(f, "{} {} {}", self.kind.tag(), self.u, v),
            None => write!(f, "{} {}", self.kind.tag(), self.u),
        }
    }
}

impl FromStr for OpRecord {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let mut it = s.split(' ');
        let kind = match it.next() {
            Some("I") => OpKind::InsEdge,
            Some("D") => OpKind::DelEdge,
            Some("S") => OpKind::SearchEdge,
            Some("N") => OpKind::ScanNbr,
            Some("V") => OpKind::InsVtx,
            other => return Err(format!("unknown record tag {other:?}")),
        };
        let mut num = || -> std::result::Result<u64, String> {
            let t = it.next().ok_or("missing field")?;
            t.parse().map_err(|e| format!("bad id `{t}`: {e}"))
        };
        let u = num()?;
        let v = if kind.is_edge_op() { Some(num()?) } else { None };
        if it.next().is_some() {
            return Err("trailing fields".into());
        }
        Ok(OpRecord { kind, u, v })
    }
}

/// A parsed edge list.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EdgeList {
    pub edges: Vec<(VertexId, VertexId)>,
    /// Present when every line carried a third column.
    pub weights: Option<Vec<u64>>,
    /// Whether the input was ordered by its timestamp column.
    pub timestamped: bool,
}

impl EdgeList {
    pub fn num_vertices(&self) -> u64 {
        self.edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0)
    }

    pub fn weighted(&self) -> Option<Vec<(VertexId, VertexId, u64)>> {
        let w = self.weights.as_ref()?;
        Some(self.edges.iter().zip(w).map(|(&(u, v), &w)| (u, v, w)).collect())
    }

    /// Add the reverse of every edge (undirected input).
    pub fn symmetrize(&mut self) {
        let n = self.edges.len();
        for i in 0..n {
            let (u, v) = self.edges[i];
            self.edges.push((v, u));
        }
        if let Some(w) = &mut self.weights {
            w.extend_from_within(..);
        }
    }
}

pub fn parse_edge_list<R: BufRead>(reader: R, timestamped: bool) -> Result<EdgeList> {
    let mut rows: Vec<(u64, VertexId, VertexId, Option<u64>)> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(' ').collect();
        let lead = usize::from(timestamped);
        if fields.len() < lead + 2 || fields.len() > lead + 3 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected {} or {} fields", lead + 2, lead + 3),
            });
        }
        let num = |s: &str| -> Result<u64> {
            s.parse().map_err(|e| Error::Parse {
                line: lineno,
                msg: format!("`{s}`: {e}"),
            })
        };
        let ts = if timestamped { num(fields[0])? } else { 0 };
        let u = num(fields[lead])?;
        let v = num(fields[lead + 1])?;
        let w = match fields.get(lead + 2) {
            Some(s) if s.starts_with('-') => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("negative weight {s}"),
                })
            }
            Some(s) => Some(num(s)?),
            None => None,
        };
        rows.push((ts, u, v, w));
    }
    if timestamped {
        rows.sort_by_key(|r| r.0);
    }
    let all_weighted = !rows.is_empty() && rows.iter().all(|r| r.3.is_some());
    Ok(EdgeList {
        edges: rows.iter().map(|r| (r.1, r.2)).collect(),
        weights: all_weighted.then(|| rows.iter().map(|r| r.3.unwrap()).collect()),
        timestamped,
    })
}

pub fn read_edge_list(path: &Path, timestamped: bool) -> Result<EdgeList> {
    let f = std::fs::File::open(path)?;
    parse_edge_list(std::io::BufReader::new(f), timestamped)
}

pub fn write_edge_list<W: Write>(mut w: W, edges: &[(VertexId, VertexId)]) -> Result<()> {
    for (u, v) in edges {
        writeln!(w, "{u} {v}")?;
    }
    Ok(())
}

pub fn parse_ops<R: BufRead>(reader: R) -> Result<Vec<OpRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(line.parse().map_err(|msg| Error::Parse { line: i + 1, msg })?);
    }
    Ok(out)
}

pub fn write_ops<W: Write>(mut w: W, ops: &[OpRecord]) -> Result<()> {
    for op in ops {
        writeln!(w, "{op}")?;
    }
    Ok(())
}

/// Initial graph and insert stream: the first `floor(0.8 m)` edges (after a
/// seeded shuffle unless the input is timestamp ordered) form the initial
/// graph, the rest are inserted.
pub fn split_insert_stream(
    edges: &[(VertexId, VertexId)],
    seed: u64,
    timestamped: bool,
) -> (Vec<(VertexId, VertexId)>, Vec<OpRecord>) {
    let mut e = edges.to_vec();
    if !timestamped {
        SplitMix64::new(seed).shuffle(&mut e);
    }
    let cut = e.len() * 4 / 5;
    let inserts = e[cut..]
        .iter()
        .map(|&(u, v)| OpRecord::edge(OpKind::InsEdge, u, v))
        .collect();
    e.truncate(cut);
    (e, inserts)
}

/// `floor(0.2 m)` search targets drawn without replacement from `edges`.
pub fn gen_search_stream(edges: &[(VertexId, VertexId)], seed: u64) -> Vec<OpRecord> {
    let k = edges.len() / 5;
    SplitMix64::new(seed)
        .sample_indices(edges.len(), k)
        .into_iter()
        .map(|i| OpRecord::edge(OpKind::SearchEdge, edges[i].0, edges[i].1))
        .collect()
}

/// How scan targets are chosen from vertex degrees.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanSelection {
    /// The `floor(0.2 n)` highest-degree vertices, ties to the lower ID.
    #[default]
    TopDegree,
    /// `floor(0.2 n)` vertices sampled without replacement with probability
    /// proportional to degree (zero-degree vertices last).
    DegreeWeighted,
}

/// Scan targets from per-vertex degrees (`degrees[u]` for vertex `u`),
/// in seeded random order.
pub fn gen_scan_stream(degrees: &[usize], seed: u64, how: ScanSelection) -> Vec<OpRecord> {
    let k = degrees.len() / 5;
    let mut rng = SplitMix64::new(seed);
    let mut chosen: Vec<VertexId> = match how {
        ScanSelection::TopDegree => {
            let mut ids: Vec<VertexId> = (0..degrees.len() as u64).collect();
            ids.sort_by(|&a, &b| degrees[b as usize].cmp(&degrees[a as usize]).then(a.cmp(&b)));
            ids.truncate(k);
            ids
        }
        ScanSelection::DegreeWeighted => {
            // Exponential-key weighted sampling: key = -ln(r) / w, smallest
            // keys win.
            let mut keyed: Vec<(f64, VertexId)> = degrees
                .iter()
                .enumerate()
                .map(|(u, &d)| {
                    let r = rng.next_f64().max(f64::MIN_POSITIVE);
                    let key = if d == 0 { f64::INFINITY } else { -r.ln() / d as f64 };
                    (key, u as VertexId)
                })
                .collect();
            keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            keyed.into_iter().take(k).map(|x| x.1).collect()
        }
    };
    rng.shuffle(&mut chosen);
    chosen
        .into_iter()
        .map(|u| OpRecord::vertex(OpKind::ScanNbr, u))
        .collect()
}

/// Out-degrees of `[0, n)` under `edges` (duplicates counted once).
pub fn degrees(n: u64, edges: &[(VertexId, VertexId)]) -> Vec<usize> {
    let mut seen = HashSet::with_capacity(edges.len());
    let mut d = vec![0usize; n as usize];
    for &e in edges {
        if seen.insert(e) {
            d[e.0 as usize] += 1;
        }
    }
    d
}

/// Number of equal-size sets filling `total_bytes`.
pub fn synthetic_set_count(set_size: usize, total_bytes: u64, word_bytes: usize) -> Result<u64> {
    if set_size == 0 || word_bytes == 0 {
        return Err(Error::InvalidArgument("set size and word size must be positive".into()));
    }
    if set_size as u64 > SYNTHETIC_ID_SPACE {
        return Err(Error::InvalidArgument(format!(
            "set size {set_size} exceeds the ID space {SYNTHETIC_ID_SPACE}"
        )));
    }
    let per = set_size as u64 * word_bytes as u64;
    if total_bytes < per {
        return Err(Error::InvalidArgument(format!(
            "total {total_bytes} bytes is smaller than one set ({per} bytes)"
        )));
    }
    Ok(total_bytes / per)
}

/// Uniform-size synthetic sets: set `i` becomes vertex `i` whose neighbors
/// are `set_size` distinct IDs uniform over `[0, 2^22)`, returned ascending.
pub fn gen_synthetic(
    set_size: usize,
    total_bytes: u64,
    word_bytes: usize,
    seed: u64,
) -> Result<Vec<Vec<VertexId>>> {
    let x = synthetic_set_count(set_size, total_bytes, word_bytes)?;
    let mut rng = SplitMix64::new(seed);
    let mut sets = Vec::with_capacity(x as usize);
    let mut seen = HashSet::with_capacity(set_size * 2);
    for _ in 0..x {
        seen.clear();
        let mut s = Vec::with_capacity(set_size);
        while s.len() < set_size {
            let v = rng.below(SYNTHETIC_ID_SPACE);
            if seen.insert(v) {
                s.push(v);
            }
        }
        s.sort_unstable();
        sets.push(s);
    }
    Ok(sets)
}

/// Everything a benchmark run replays.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub seed: u64,
    pub directed: bool,
    #[serde(skip)]
    pub initial_edges: Vec<(VertexId, VertexId)>,
    #[serde(skip)]
    pub inserts: Vec<OpRecord>,
    #[serde(skip)]
    pub searches: Vec<OpRecord>,
    #[serde(skip)]
    pub scans: Vec<OpRecord>,
}

pub const INITIAL_FILE: &str = "initial.el";
pub const INSERT_FILE: &str = "insert.ops";
pub const SEARCH_FILE: &str = "search.ops";
pub const SCAN_FILE: &str = "scan.ops";
pub const MANIFEST_FILE: &str = "workload.json";

impl WorkloadSpec {
    /// Build the standard streams from an edge list. Undirected input is
    /// stored in both directions before splitting, so each insert names one
    /// direction.
    pub fn from_edges(mut list: EdgeList, directed: bool, seed: u64, how: ScanSelection) -> Self {
        if !directed {
            list.symmetrize();
        }
        let (initial, inserts) = split_insert_stream(&list.edges, seed, list.timestamped);
        let searches = gen_search_stream(&initial, seed.wrapping_add(1));
        let n = list.num_vertices();
        let scans = gen_scan_stream(&degrees(n, &initial), seed.wrapping_add(2), how);
        WorkloadSpec {
            seed,
            directed,
            initial_edges: initial,
            inserts,
            searches,
            scans,
        }
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let file = |name: &str| -> Result<std::io::BufWriter<std::fs::File>> {
            Ok(std::io::BufWriter::new(std::fs::File::create(dir.join(name))?))
        };
        write_edge_list(file(INITIAL_FILE)?, &self.initial_edges)?;
        write_ops(file(INSERT_FILE)?, &self.inserts)?;
        write_ops(file(SEARCH_FILE)?, &self.searches)?;
        write_ops(file(SCAN_FILE)?, &self.scans)?;
        serde_json::to_writer_pretty(file(MANIFEST_FILE)?, self)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let open = |name: &str| -> Result<std::io::BufReader<std::fs::File>> {
            let p = dir.join(name);
            std::fs::File::open(&p)
                .map(std::io::BufReader::new)
                .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", p.display()))))
        };
        let mut spec: WorkloadSpec = serde_json::from_reader(open(MANIFEST_FILE)?)?;
        spec.initial_edges = parse_edge_list(open(INITIAL_FILE)?, false)?.edges;
        spec.inserts = parse_ops(open(INSERT_FILE)?)?;
        spec.searches = parse_ops(open(SEARCH_FILE)?)?;
        spec.scans = parse_ops(open(SCAN_FILE)?)?;
        Ok(spec)
    }
}
