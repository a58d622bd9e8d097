//! Timestamped edge lists and their binning into snapshot sequences.

use std::collections::HashMap;
use std::io::BufRead;
use std::sync::Arc;

use crate::sparse::{NodeSet, SparseMatrix};
use crate::{Error, Result};

/// Column layout of an edge-list file. Columns are 0-based; `time_col: None`
/// takes the last field of each line.
#[derive(Clone, Debug)]
pub struct FormatOptions {
    pub src_col: usize,
    pub dst_col: usize,
    pub time_col: Option<usize>,
}

impl Default for FormatOptions {
    fn default() -> Self {
        Self {
            src_col: 0,
            dst_col: 1,
            time_col: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TemporalEdge {
    pub src: usize,
    pub dst: usize,
    pub timestamp: u64,
}

/// Raw edges with dense node ids assigned in order of first appearance.
#[derive(Clone, Debug, Default)]
pub struct TemporalEdgeList {
    edges: Vec<TemporalEdge>,
    node_ids: Vec<String>,
}

impl TemporalEdgeList {
    /// Builds a list over integer node ids `0..node_count`.
    pub fn from_edges(node_count: usize, edges: Vec<TemporalEdge>) -> Result<Self> {
        for e in &edges {
            for node in [e.src, e.dst] {
                if node >= node_count {
                    return Err(Error::NodeOutOfRange {
                        node,
                        universe: node_count,
                    });
                }
            }
        }
        Ok(Self {
            edges,
            node_ids: (0..node_count).map(|i| i.to_string()).collect(),
        })
    }

    pub fn edges(&self) -> &[TemporalEdge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    /// Original identifier of each dense node index.
    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }
}

/// Parses a whitespace- or comma-separated edge list. Lines starting with `#`
/// or `%` are comments; extra columns are ignored.
pub fn parse_edge_list<R: BufRead>(reader: R, opts: &FormatOptions) -> Result<TemporalEdgeList> {
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut node_ids = Vec::new();
    let mut edges = Vec::new();
    let mut intern = |name: &str| -> usize {
        if let Some(&i) = ids.get(name) {
            return i;
        }
        let i = node_ids.len();
        ids.insert(name.to_owned(), i);
        node_ids.push(name.to_owned());
        i
    };

    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        if fields.len() < 3 {
            return Err(Error::Parse {
                line: lineno,
                message: format!(
                    "expected at least 3 fields (src, dst, timestamp), found {}",
                    fields.len()
                ),
            });
        }
        let time_col = opts.time_col.unwrap_or(fields.len() - 1);
        let needed = opts.src_col.max(opts.dst_col).max(time_col);
        if needed >= fields.len() {
            return Err(Error::Parse {
                line: lineno,
                message: format!(
                    "column {} requested but line has {} fields",
                    needed,
                    fields.len()
                ),
            });
        }
        let timestamp = parse_timestamp(fields[time_col]).ok_or_else(|| Error::Parse {
            line: lineno,
            message: format!("invalid timestamp `{}`", fields[time_col]),
        })?;
        let src = intern(fields[opts.src_col]);
        let dst = intern(fields[opts.dst_col]);
        edges.push(TemporalEdge {
            src,
            dst,
            timestamp,
        });
    }
    if edges.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(TemporalEdgeList { edges, node_ids })
}

/// Integer seconds; fractional timestamps are floored.
fn parse_timestamp(field: &str) -> Option<u64> {
    if let Ok(t) = field.parse::<u64>() {
        return Some(t);
    }
    let t = field.parse::<f64>().ok()?;
    (t.is_finite() && t >= 0.0 && t < u64::MAX as f64).then(|| t.floor() as u64)
}

#[derive(Clone, Debug)]
pub struct BinningOptions {
    /// Width of one snapshot in seconds.
    pub time_aggregation: u64,
    /// Mirror every edge before adding self-loops.
    pub undirected: bool,
    /// Sum repeated edges inside a bin instead of collapsing them to 1.
    pub sum_weights: bool,
}

impl Default for BinningOptions {
    fn default() -> Self {
        Self {
            time_aggregation: 1_200_000,
            undirected: false,
            sum_weights: false,
        }
    }
}

/// Self-looped snapshots over a shared node universe, with the activated
/// nodes (those touching a non-self-loop edge) of each step.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotSequence {
    n: usize,
    snapshots: Vec<Arc<SparseMatrix>>,
    activated: Vec<NodeSet>,
}

impl SnapshotSequence {
    /// Wraps adjacency matrices that already carry all `n` self-loops.
    pub fn from_matrices(snapshots: Vec<SparseMatrix>) -> Result<Self> {
        let n = snapshots.first().map(SparseMatrix::n_rows).ok_or_else(|| {
            Error::InvalidArgument("a sequence needs at least one snapshot".into())
        })?;
        let mut activated = Vec::with_capacity(snapshots.len());
        for (t, a) in snapshots.iter().enumerate() {
            if a.shape() != (n, n) {
                return Err(Error::DimensionMismatch {
                    op: "snapshot sequence",
                    left: (n, n),
                    right: a.shape(),
                });
            }
            if let Some(v) = (0..n).find(|&v| a.get(v, v) == 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "snapshot {} lacks the self-loop of node {v}",
                    t + 1
                )));
            }
            activated.push(activated_nodes(a));
        }
        Ok(Self {
            n,
            snapshots: snapshots.into_iter().map(Arc::new).collect(),
            activated,
        })
    }

    /// Builds binary self-looped snapshots from per-step edge lists.
    pub fn from_edge_sets(
        n: usize,
        steps: &[Vec<(usize, usize)>],
        undirected: bool,
    ) -> Result<Self> {
        let snapshots = steps
            .iter()
            .map(|edges| {
                snapshot_matrix(
                    n,
                    edges.iter().map(|&(u, v)| (u, v, 1.0)),
                    undirected,
                    false,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_matrices(snapshots)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    /// Snapshot at 0-based position `t`.
    pub fn snapshot(&self, t: usize) -> &SparseMatrix {
        &self.snapshots[t]
    }

    pub fn activated(&self, t: usize) -> &NodeSet {
        &self.activated[t]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SparseMatrix, &NodeSet)> {
        self.snapshots
            .iter()
            .map(|a| a.as_ref())
            .zip(&self.activated)
    }

    /// Non-self-loop entries of snapshot `t`.
    pub fn edge_count(&self, t: usize) -> usize {
        let a = &self.snapshots[t];
        a.entries().filter(|&(r, c, _)| r != c).count()
    }

    /// Marks `A_t[u, v] = 1`. Inserting a self-loop is a no-op.
    pub fn insert_edge(&self, t: usize, u: usize, v: usize) -> Result<Self> {
        self.check_edit(t, u, v)?;
        if u == v {
            return Ok(self.clone());
        }
        let a = &self.snapshots[t];
        let updated = SparseMatrix::from_triplets(
            self.n,
            self.n,
            a.entries()
                .filter(|&(r, c, _)| (r, c) != (u, v))
                .chain([(u, v, 1.0)]),
        )?;
        Ok(self.with_snapshot(t, updated))
    }

    /// Marks `A_t[u, v] = 0`. Self-loops cannot be deleted.
    pub fn delete_edge(&self, t: usize, u: usize, v: usize) -> Result<Self> {
        self.check_edit(t, u, v)?;
        if u == v {
            return Err(Error::InvalidArgument(format!(
                "self-loop of node {u} cannot be deleted"
            )));
        }
        let updated = self.snapshots[t].filter(|r, c, _| (r, c) != (u, v));
        Ok(self.with_snapshot(t, updated))
    }

    fn check_edit(&self, t: usize, u: usize, v: usize) -> Result<()> {
        if t >= self.len() {
            return Err(Error::InvalidArgument(format!(
                "time step {t} outside a sequence of length {}",
                self.len()
            )));
        }
        for node in [u, v] {
            if node >= self.n {
                return Err(Error::NodeOutOfRange {
                    node,
                    universe: self.n,
                });
            }
        }
        Ok(())
    }

    fn with_snapshot(&self, t: usize, a: SparseMatrix) -> Self {
        let mut next = self.clone();
        next.activated[t] = activated_nodes(&a);
        next.snapshots[t] = Arc::new(a);
        next
    }
}

/// Nodes incident to at least one off-diagonal entry.
pub fn activated_nodes(a: &SparseMatrix) -> NodeSet {
    let mut active = vec![false; a.n_rows().max(a.n_cols())];
    for (r, c, _) in a.entries() {
        if r != c {
            active[r] = true;
            active[c] = true;
        }
    }
    let members = active
        .iter()
        .enumerate()
        .filter(|(_, &on)| on)
        .map(|(i, _)| i);
    NodeSet::new(active.len(), members).expect("indices come from the matrix")
}

fn snapshot_matrix<I>(
    n: usize,
    edges: I,
    undirected: bool,
    sum_weights: bool,
) -> Result<SparseMatrix>
where
    I: Iterator<Item = (usize, usize, f64)>,
{
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    for (u, v, w) in edges {
        if u == v {
            continue;
        }
        entries.push((u, v, w));
        if undirected {
            entries.push((v, u, w));
        }
    }
    let off_diagonal = SparseMatrix::from_triplets(n, n, entries)?;
    let off_diagonal = if sum_weights {
        off_diagonal
    } else {
        off_diagonal.map_values(|_| 1.0)
    };
    SparseMatrix::from_triplets(
        n,
        n,
        off_diagonal.entries().chain((0..n).map(|v| (v, v, 1.0))),
    )
}

/// Splits edges into snapshots of width `time_aggregation`, anchored at the
/// earliest timestamp.
///
/// Interior bins without edges are kept as self-loop-only snapshots; the
/// sequence ends at the last bin holding an edge.
pub fn bin_snapshots(edges: &TemporalEdgeList, opts: &BinningOptions) -> Result<SnapshotSequence> {
    if opts.time_aggregation == 0 {
        return Err(Error::InvalidConfig(
            "time aggregation must be positive".into(),
        ));
    }
    let min_ts = edges
        .edges
        .iter()
        .map(|e| e.timestamp)
        .min()
        .ok_or(Error::EmptyInput)?;
    let bin_of = |ts: u64| ((ts - min_ts) / opts.time_aggregation) as usize;
    let steps = edges
        .edges
        .iter()
        .map(|e| bin_of(e.timestamp))
        .max()
        .unwrap_or(0)
        + 1;

    let mut per_bin: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); steps];
    for e in &edges.edges {
        per_bin[bin_of(e.timestamp)].push((e.src, e.dst, 1.0));
    }
    let n = edges.node_count();
    let snapshots = per_bin
        .into_iter()
        .map(|bin| snapshot_matrix(n, bin.into_iter(), opts.undirected, opts.sum_weights))
        .collect::<Result<Vec<_>>>()?;
    SnapshotSequence::from_matrices(snapshots)
}

/// Per-dataset summary in the style of a dataset table.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SequenceStats {
    pub nodes: usize,
    /// Non-self-loop entries summed over all snapshots.
    pub edges: usize,
    pub steps: usize,
    pub mean_activated: f64,
    pub mean_edges: f64,
}

impl SequenceStats {
    pub fn of(seq: &SnapshotSequence) -> Self {
        let steps = seq.len();
        let edges: usize = (0..steps).map(|t| seq.edge_count(t)).sum();
        let activated: usize = (0..steps).map(|t| seq.activated(t).len()).sum();
        Self {
            nodes: seq.node_count(),
            edges,
            steps,
            mean_activated: activated as f64 / steps as f64,
            mean_edges: edges as f64 / steps as f64,
        }
    }

    /// Average edges per activated node, `mean_edges / mean_activated`.
    pub fn density(&self) -> f64 {
        if self.mean_activated == 0.0 {
            0.0
        } else {
            self.mean_edges / self.mean_activated
        }
    }
}
