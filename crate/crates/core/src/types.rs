use std::fmt;

use serde::{Deserialize, Serialize};

/// Dense vertex identifier in `[0, |V|)`.
pub type VertexId = u64;

/// Global commit counter. `t(G)` starts at zero and moves by exactly one per
/// committed write transaction; a reader's `t(Q)` is the value it observed at
/// begin.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Timestamp(pub u64);

impl Timestamp {
    pub const ZERO: Timestamp = Timestamp(0);

    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn next(self) -> Timestamp {
        Timestamp(self.0 + 1)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u64> for Timestamp {
    fn from(v: u64) -> Self {
        Timestamp(v)
    }
}

/// One edge mutation inside a write transaction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeOp {
    Insert(VertexId, VertexId),
    Delete(VertexId, VertexId),
}

impl EdgeOp {
    #[inline]
    pub fn source(&self) -> VertexId {
        match *self {
            EdgeOp::Insert(u, _) | EdgeOp::Delete(u, _) => u,
        }
    }

    #[inline]
    pub fn target(&self) -> VertexId {
        match *self {
            EdgeOp::Insert(_, v) | EdgeOp::Delete(_, v) => v,
        }
    }

    #[inline]
    pub fn is_insert(&self) -> bool {
        matches!(self, EdgeOp::Insert(..))
    }
}

/// Which family of neighbor index backs every `N(u)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContainerKind {
    /// Unsorted dynamic array with a per-set bloom filter.
    Unsorted,
    /// Sorted dynamic array (the AdjLst baseline).
    Sorted,
    /// Packed memory array.
    Pma,
    /// Segmented skip list with adaptive indexing.
    Segsl,
    /// Copy-on-write segmented tree.
    Cow,
}

impl ContainerKind {
    pub const ALL: [ContainerKind; 5] = [
        ContainerKind::Unsorted,
        ContainerKind::Sorted,
        ContainerKind::Pma,
        ContainerKind::Segsl,
        ContainerKind::Cow,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ContainerKind::Unsorted => "unsorted",
            ContainerKind::Sorted => "sorted",
            ContainerKind::Pma => "pma",
            ContainerKind::Segsl => "segsl",
            ContainerKind::Cow => "cow",
        }
    }

    /// Whether neighbor scans come out in ascending ID order.
    pub fn is_sorted(self) -> bool {
        !matches!(self, ContainerKind::Unsorted)
    }
}

impl fmt::Display for ContainerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ContainerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ContainerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown container `{s}`"))
    }
}

/// Concurrency-control regime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CcMode {
    /// Per-vertex locks acquired in ascending ID order plus per-element versions.
    Fine,
    /// Single writer publishing immutable copy-on-write snapshots.
    Coarse,
    /// No locking protocol and no version metadata.
    Off,
}

impl CcMode {
    pub fn name(self) -> &'static str {
        match self {
            CcMode::Fine => "fine",
            CcMode::Coarse => "coarse",
            CcMode::Off => "off",
        }
    }
}

impl fmt::Display for CcMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CcMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fine" => Ok(CcMode::Fine),
            "coarse" => Ok(CcMode::Coarse),
            "off" => Ok(CcMode::Off),
            _ => Err(format!("unknown cc mode `{s}`")),
        }
    }
}

/// Vertex index design used in fine and off modes. Coarse mode always uses
/// the persistent AVL tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VertexIndexKind {
    Dense,
    Hash,
    Tree,
}

impl std::str::FromStr for VertexIndexKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dense" => Ok(VertexIndexKind::Dense),
            "hash" => Ok(VertexIndexKind::Hash),
            "tree" | "avl" => Ok(VertexIndexKind::Tree),
            _ => Err(format!("unknown vertex index `{s}`")),
        }
    }
}
