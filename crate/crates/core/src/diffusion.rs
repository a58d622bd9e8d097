//! Time-aware random-walk diffusion, one snapshot at a time.
//!
//! Each step turns the self-looped adjacency `A_t` and the carried diffusion
//! matrix `X̃_{t-1}` into `X̃_t`:
//!
//! 1. row-normalize `A_t` into `Ã_t`;
//! 2. approximate the RWR kernel `Ľ_t = (α+β)(I − cÃ_tᵀ)⁻¹`, `c = 1 − α − β`,
//!    with `K` power iterations;
//! 3. spatial augmenter `S_t = Ľ_t`, temporal augmenter `T_t = S_t X̃_{t-1}`;
//! 4. `X_t = (1 − γ)S_t + γT_t` with `γ = β/(α+β)`;
//! 5. drop entries below `ε`, then renormalize every column.
//!
//! Only activated nodes (those with a real edge in `A_t`) move the walker, so
//! `Ã_tᵀ` is block diagonal with an identity block on the idle nodes. The
//! kernel is iterated on the activated block only and is the exact identity
//! elsewhere. Inside the block, weakly connected components never mix, so
//! each kernel column is iterated as a dense vector over its own component.

use std::sync::Arc;

use rayon::prelude::*;

use crate::dynamics::{self, PostProcessConfig};
use crate::ingest::SnapshotSequence;
use crate::sparse::{self, Accumulator, NodeSet, SparseMatrix, CANCELLATION_EPS};
use crate::{Error, Result};

/// Tolerance on column sums for a matrix to count as column-stochastic.
pub const STOCHASTIC_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DiffusionConfig {
    /// Restart probability.
    pub alpha: f64,
    /// Time-travel probability; zero reduces each step to a plain PPR kernel.
    pub beta: f64,
    /// Number of power iterations `K`.
    pub iterations: usize,
    /// Entries strictly below this are filtered out of `X_t`.
    pub epsilon: f64,
    /// Stop a kernel column early once an iteration changes it by less than
    /// this in L1. Off by default.
    pub converge_tol: Option<f64>,
    /// Emit `X̃_tᵀ` (row-stochastic, adjacency orientation) instead of `X̃_t`.
    pub transpose_output: bool,
    pub post: PostProcessConfig,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        Self {
            alpha: 0.25,
            beta: 0.25,
            iterations: 100,
            epsilon: 1e-3,
            converge_tol: None,
            transpose_output: true,
            post: PostProcessConfig::default(),
        }
    }
}

impl DiffusionConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return bad(format!("alpha must be > 0 (got {})", self.alpha));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return bad(format!("beta must be >= 0 (got {})", self.beta));
        }
        if self.alpha + self.beta >= 1.0 {
            return bad(format!(
                "alpha + beta must be < 1 (got {} + {} = {})",
                self.alpha,
                self.beta,
                self.alpha + self.beta
            ));
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        if !(self.epsilon.is_finite() && (0.0..1.0).contains(&self.epsilon)) {
            return bad(format!("epsilon must lie in [0, 1) (got {})", self.epsilon));
        }
        if let Some(tol) = self.converge_tol {
            if !(tol.is_finite() && tol > 0.0) {
                return bad(format!("convergence tolerance must be > 0 (got {tol})"));
            }
        }
        Ok(())
    }

    /// Temporal decay ratio `β/(α+β)`.
    pub fn gamma(&self) -> f64 {
        self.beta / (self.alpha + self.beta)
    }

    /// Walk continuation probability `1 − α − β`.
    pub fn decay(&self) -> f64 {
        1.0 - self.alpha - self.beta
    }
}

/// The carried diffusion matrix `X̃_{t-1}` and the index of the last step
/// folded into it (`0` before any snapshot).
#[derive(Clone, Debug, PartialEq)]
pub struct DiffusionState {
    x_prev: Arc<SparseMatrix>,
    t: usize,
}

impl DiffusionState {
    /// `X̃_0 = I_n`.
    pub fn new(n: usize) -> Self {
        Self {
            x_prev: Arc::new(SparseMatrix::identity(n)),
            t: 0,
        }
    }

    /// Wraps an existing diffusion matrix; every nonempty column must sum
    /// to one.
    pub fn from_matrix(x: SparseMatrix, t: usize) -> Result<Self> {
        if !x.is_square() {
            return Err(Error::InvalidArgument(format!(
                "diffusion state must be square, got {:?}",
                x.shape()
            )));
        }
        if let Some((j, s)) = x
            .column_sums()
            .into_iter()
            .enumerate()
            .find(|&(j, s)| x.column_nnz(j) > 0 && (s - 1.0).abs() > STOCHASTIC_TOL)
        {
            return Err(Error::InvalidArgument(format!(
                "column {j} of the diffusion state sums to {s}"
            )));
        }
        Ok(Self {
            x_prev: Arc::new(x),
            t,
        })
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.x_prev
    }

    pub fn shared_matrix(&self) -> Arc<SparseMatrix> {
        Arc::clone(&self.x_prev)
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn node_count(&self) -> usize {
        self.x_prev.n_rows()
    }
}

/// Column-stochastic RWR kernel in block form: `block` acts on the
/// activated nodes, identity everywhere else.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    n: usize,
    activated: NodeSet,
    /// Global node -> position in `activated`, `u32::MAX` when idle.
    local: Vec<u32>,
    block: SparseMatrix,
}

const IDLE: u32 = u32::MAX;

impl Kernel {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            activated: NodeSet::empty(n),
            local: vec![IDLE; n],
            block: SparseMatrix::zeros(0, 0),
        }
    }

    /// Assembles a kernel from an already computed activated block.
    pub fn from_block(activated: NodeSet, block: SparseMatrix) -> Result<Self> {
        let k = activated.len();
        if block.shape() != (k, k) {
            return Err(Error::DimensionMismatch {
                op: "kernel block",
                left: (k, k),
                right: block.shape(),
            });
        }
        let n = activated.universe();
        if n >= IDLE as usize {
            return Err(Error::InvalidArgument(format!(
                "{n} nodes exceed the supported index range"
            )));
        }
        let mut local = vec![IDLE; n];
        for (p, v) in activated.iter().enumerate() {
            local[v] = p as u32;
        }
        Ok(Self {
            n,
            activated,
            local,
            block,
        })
    }

    /// Kernel of a row-normalized snapshot whose off-diagonal entries all lie
    /// inside `activated`.
    pub fn from_normalized(
        a_norm: &SparseMatrix,
        activated: &NodeSet,
        cfg: &DiffusionConfig,
    ) -> Result<Self> {
        let block = sparse::extract_block(a_norm, activated, activated)?;
        Self::from_block(activated.clone(), power_iteration(&block, cfg))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn activated(&self) -> &NodeSet {
        &self.activated
    }

    pub fn block(&self) -> &SparseMatrix {
        &self.block
    }

    /// Column `j` of the full `n x n` kernel with global row indices.
    fn column_into(&self, j: usize, out: &mut Vec<(usize, f64)>) {
        out.clear();
        match self.local[j] {
            IDLE => out.push((j, 1.0)),
            p => {
                let (rows, vals) = self.block.column(p as usize);
                let members = self.activated.members();
                out.extend(rows.iter().zip(vals).map(|(&r, &v)| (members[r], v)));
            }
        }
    }

    /// Column `j` of `kernel * x` on the block path: rows of `x` held by idle
    /// nodes pass through unchanged.
    fn apply_column(&self, x: &SparseMatrix, j: usize, acc: &mut Accumulator) -> Vec<(usize, f64)> {
        let members = self.activated.members();
        let (rows, vals) = x.column(j);
        for (&k, &v) in rows.iter().zip(vals) {
            match self.local[k] {
                IDLE => acc.add(k, v),
                p => {
                    let (br, bv) = self.block.column(p as usize);
                    for (&r, &s) in br.iter().zip(bv) {
                        acc.add(members[r], s * v);
                    }
                }
            }
        }
        acc.drain_sorted(CANCELLATION_EPS)
    }
}

/// Weakly connected components of a square matrix's pattern.
struct Components {
    /// Position of each node inside its component.
    pos: Vec<usize>,
    /// Sorted members of every component.
    members: Vec<Vec<usize>>,
}

impl Components {
    fn of_pattern(a: &SparseMatrix) -> Self {
        let n = a.n_rows();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (r, c, _) in a.entries() {
            let (ra, rb) = (find(&mut parent, r), find(&mut parent, c));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut id_of_root = vec![usize::MAX; n];
        let mut pos = vec![0; n];
        let mut members: Vec<Vec<usize>> = Vec::new();
        for (v, slot) in pos.iter_mut().enumerate() {
            let root = find(&mut parent, v);
            if id_of_root[root] == usize::MAX {
                id_of_root[root] = members.len();
                members.push(Vec::new());
            }
            let id = id_of_root[root];
            *slot = members[id].len();
            members[id].push(v);
        }
        Self { pos, members }
    }
}

/// Raw power iterate `M^(K)` of `M^(k) = I + c Ãᵀ M^(k-1)`, `M^(0) = I`, for a
/// row-stochastic `a_norm`.
///
/// The error against `(I − cÃᵀ)⁻¹` is at most `c^K · c/(1−c)` in the L1 norm
/// of every column.
pub fn power_iterate(
    a_norm: &SparseMatrix,
    c: f64,
    iterations: usize,
    converge_tol: Option<f64>,
) -> SparseMatrix {
    iterate_columns(a_norm, c, iterations, converge_tol, |_| {})
}

/// Normalized kernel block `(1 − c) M^(K)`, rescaled so each column sums
/// to one.
pub fn power_iteration(a_norm_block: &SparseMatrix, cfg: &DiffusionConfig) -> SparseMatrix {
    let c = cfg.decay();
    iterate_columns(a_norm_block, c, cfg.iterations, cfg.converge_tol, |col| {
        for (_, v) in col.iter_mut() {
            *v *= 1.0 - c;
        }
        sparse::normalize_column(col);
    })
}

/// Columns iterated together; each lane runs the single-column recurrence
/// unchanged, so the batch width does not affect results.
const LANES: usize = 8;

fn iterate_columns<F>(
    a: &SparseMatrix,
    c: f64,
    iterations: usize,
    tol: Option<f64>,
    finish: F,
) -> SparseMatrix
where
    F: Fn(&mut Vec<(usize, f64)>) + Sync,
{
    assert!(a.is_square(), "power iteration needs a square matrix");
    let n = a.n_rows();
    let comps = Components::of_pattern(a);
    // Rows of `a` in component-local coordinates: entry (k, v) of column i
    // contributes v * x[k] to (Ãᵀ x)[i].
    let local_rows: Vec<usize> = a.row_idx.iter().map(|&k| comps.pos[k]).collect();

    // Work units: up to LANES columns of one component.
    let units: Vec<(usize, &[usize])> = comps
        .members
        .iter()
        .enumerate()
        .flat_map(|(id, m)| m.chunks(LANES).map(move |chunk| (id, chunk)))
        .collect();

    type Column = Vec<(usize, f64)>;
    let batches: Vec<Vec<(usize, Column)>> = units
        .into_par_iter()
        .map_init(
            || (Vec::new(), Vec::new()),
            |(x, y): &mut (Vec<[f64; LANES]>, Vec<[f64; LANES]>), (id, homes)| {
                let members = &comps.members[id];
                let size = members.len();
                let lanes = homes.len();
                x.clear();
                x.resize(size, [0.0; LANES]);
                y.clear();
                y.resize(size, [0.0; LANES]);
                let home_of: Vec<usize> = homes.iter().map(|&j| comps.pos[j]).collect();
                for (b, &h) in home_of.iter().enumerate() {
                    x[h][b] = 1.0;
                }
                let mut done = [false; LANES];
                for _ in 0..iterations {
                    let mut delta = [0.0f64; LANES];
                    for (li, &node) in members.iter().enumerate() {
                        let (lo, hi) = (a.col_ptr[node], a.col_ptr[node + 1]);
                        let mut dot = [0.0f64; LANES];
                        for (&k, &v) in local_rows[lo..hi].iter().zip(&a.values[lo..hi]) {
                            let xk = &x[k];
                            for b in 0..LANES {
                                dot[b] += v * xk[b];
                            }
                        }
                        let mut next = [0.0f64; LANES];
                        for b in 0..LANES {
                            next[b] = c * dot[b];
                        }
                        for (b, &h) in home_of.iter().enumerate() {
                            if h == li {
                                next[b] += 1.0;
                            }
                        }
                        if tol.is_some() {
                            for b in 0..lanes {
                                if done[b] {
                                    next[b] = x[li][b];
                                } else {
                                    delta[b] += (next[b] - x[li][b]).abs();
                                }
                            }
                        }
                        y[li] = next;
                    }
                    std::mem::swap(x, y);
                    if let Some(t) = tol {
                        for b in 0..lanes {
                            done[b] |= delta[b] < t;
                        }
                        if done[..lanes].iter().all(|&d| d) {
                            break;
                        }
                    }
                }
                homes
                    .iter()
                    .enumerate()
                    .map(|(b, &j)| {
                        let mut col: Vec<(usize, f64)> = members
                            .iter()
                            .zip(x.iter())
                            .filter(|(_, v)| v[b] != 0.0)
                            .map(|(&node, v)| (node, v[b]))
                            .collect();
                        finish(&mut col);
                        (j, col)
                    })
                    .collect()
            },
        )
        .collect();

    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (j, col) in batches.into_iter().flatten() {
        columns[j] = col;
    }
    SparseMatrix::from_sorted_columns(n, columns)
}

/// Full `n x n` spatial augmenter `S_t`.
pub fn spatial_augmenter(kernel: &Kernel) -> SparseMatrix {
    let mut buf = Vec::new();
    let columns = (0..kernel.n)
        .map(|j| {
            kernel.column_into(j, &mut buf);
            buf.clone()
        })
        .collect();
    SparseMatrix::from_sorted_columns(kernel.n, columns)
}

/// Temporal augmenter `T_t = S_t X̃_{t-1}` on the block path.
///
/// Produces the same entries, bit for bit, as `spmm(spatial_augmenter(k), x)`.
pub fn temporal_augmenter(kernel: &Kernel, x_prev: &SparseMatrix) -> Result<SparseMatrix> {
    if x_prev.n_rows() != kernel.n {
        return Err(Error::DimensionMismatch {
            op: "temporal_augmenter",
            left: (kernel.n, kernel.n),
            right: x_prev.shape(),
        });
    }
    let columns = (0..x_prev.n_cols())
        .into_par_iter()
        .map_init(
            || Accumulator::new(kernel.n),
            |acc, j| kernel.apply_column(x_prev, j, acc),
        )
        .collect();
    Ok(SparseMatrix::from_sorted_columns(kernel.n, columns))
}

/// `(1 − γ)S + γT`, evaluated as `S + γ(T − S)` so that `γ = 0` and `S = T`
/// both return `S` exactly.
pub fn combine(s: &SparseMatrix, t_mat: &SparseMatrix, gamma: f64) -> Result<SparseMatrix> {
    if s.shape() != t_mat.shape() {
        return Err(Error::DimensionMismatch {
            op: "combine",
            left: s.shape(),
            right: t_mat.shape(),
        });
    }
    let columns = (0..s.n_cols())
        .map(|j| {
            let (sr, sv) = s.column(j);
            let (tr, tv) = t_mat.column(j);
            combine_column(sr, sv, tr, tv, gamma)
        })
        .collect();
    Ok(SparseMatrix::from_sorted_columns(s.n_rows(), columns))
}

fn combine_column(
    sr: &[usize],
    sv: &[f64],
    tr: &[usize],
    tv: &[f64],
    gamma: f64,
) -> Vec<(usize, f64)> {
    if gamma == 0.0 {
        return sr.iter().copied().zip(sv.iter().copied()).collect();
    }
    let mut out = Vec::with_capacity(sr.len().max(tr.len()));
    let (mut i, mut j) = (0, 0);
    while i < sr.len() || j < tr.len() {
        let (row, s, t) = if j >= tr.len() || (i < sr.len() && sr[i] < tr[j]) {
            i += 1;
            (sr[i - 1], sv[i - 1], 0.0)
        } else if i >= sr.len() || tr[j] < sr[i] {
            j += 1;
            (tr[j - 1], 0.0, tv[j - 1])
        } else {
            i += 1;
            j += 1;
            (sr[i - 1], sv[i - 1], tv[j - 1])
        };
        let v = s + gamma * (t - s);
        if v != 0.0 {
            out.push((row, v));
        }
    }
    out
}

/// Drops entries strictly below `epsilon`.
///
/// A column whose entries would all be dropped keeps its single largest
/// entry, so no column of a stochastic input becomes empty.
pub fn sparsify(x: &SparseMatrix, epsilon: f64) -> SparseMatrix {
    let columns = (0..x.n_cols())
        .map(|j| {
            let (rows, vals) = x.column(j);
            let mut col: Vec<(usize, f64)> =
                rows.iter().copied().zip(vals.iter().copied()).collect();
            sparsify_column(&mut col, epsilon);
            col
        })
        .collect();
    SparseMatrix::from_sorted_columns(x.n_rows(), columns)
}

fn sparsify_column(col: &mut Vec<(usize, f64)>, epsilon: f64) {
    if epsilon == 0.0 || col.is_empty() {
        return;
    }
    let largest = col
        .iter()
        .copied()
        .fold(None, |best: Option<(usize, f64)>, e| match best {
            Some(b) if b.1 >= e.1 => Some(b),
            _ => Some(e),
        });
    col.retain(|&(_, v)| v >= epsilon);
    if col.is_empty() {
        col.extend(largest);
    }
}

/// One step of the diffusion: folds snapshot `a_t` into `state`.
///
/// Returns the emitted matrix (the new `X̃_t`, transposed and post-processed
/// according to `cfg`) and the updated state carrying `X̃_t` itself.
pub fn step(
    a_t: &SparseMatrix,
    activated: &NodeSet,
    state: DiffusionState,
    cfg: &DiffusionConfig,
) -> Result<(SparseMatrix, DiffusionState)> {
    let next = advance(a_t, activated, &state, cfg)?;
    let output = emit(&next, cfg)?;
    Ok((output, next))
}

fn advance(
    a_t: &SparseMatrix,
    activated: &NodeSet,
    state: &DiffusionState,
    cfg: &DiffusionConfig,
) -> Result<DiffusionState> {
    cfg.validate()?;
    let n = state.node_count();
    if a_t.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            op: "step",
            left: (n, n),
            right: a_t.shape(),
        });
    }
    if activated.universe() != n {
        return Err(Error::InvalidArgument(format!(
            "activated set over {} nodes, snapshot has {n}",
            activated.universe()
        )));
    }
    if let Some((r, c, _)) = a_t
        .entries()
        .find(|&(r, c, _)| r != c && !(activated.contains(r) && activated.contains(c)))
    {
        return Err(Error::InvalidArgument(format!(
            "edge ({r}, {c}) touches a node outside the activated set"
        )));
    }

    let a_norm = sparse::row_normalize(a_t)?;
    let kernel = Kernel::from_normalized(&a_norm, activated, cfg)?;
    let x_prev = state.matrix();
    let gamma = cfg.gamma();
    let epsilon = cfg.epsilon;

    let columns: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map_init(
            || (Accumulator::new(n), Vec::new()),
            |(acc, s_col): &mut (Accumulator, Vec<(usize, f64)>), j| {
                kernel.column_into(j, s_col);
                let (sr, sv): (Vec<usize>, Vec<f64>) = s_col.iter().copied().unzip();
                let mut col = if gamma == 0.0 {
                    s_col.clone()
                } else {
                    let t_col = kernel.apply_column(x_prev, j, acc);
                    let (tr, tv): (Vec<usize>, Vec<f64>) = t_col.into_iter().unzip();
                    combine_column(&sr, &sv, &tr, &tv, gamma)
                };
                sparsify_column(&mut col, epsilon);
                sparse::normalize_column(&mut col);
                col
            },
        )
        .collect();

    Ok(DiffusionState {
        x_prev: Arc::new(SparseMatrix::from_sorted_columns(n, columns)),
        t: state.t + 1,
    })
}

fn emit(state: &DiffusionState, cfg: &DiffusionConfig) -> Result<SparseMatrix> {
    let oriented = if cfg.transpose_output {
        sparse::transpose(state.matrix())
    } else {
        state.matrix().clone()
    };
    dynamics::postprocess(oriented, &cfg.post)
}

/// Result of one step of [`Diffusion`].
#[derive(Clone, Debug)]
pub struct StepOutput {
    /// 1-based time step.
    pub t: usize,
    /// Emitted matrix (oriented and post-processed).
    pub output: SparseMatrix,
    /// The column-stochastic `X̃_t` carried to the next step.
    pub diffusion: Arc<SparseMatrix>,
    pub activated_nodes: usize,
    pub activated_edges: usize,
}

/// Streaming driver that folds [`step`] over a snapshot sequence, holding
/// only the current state.
pub struct Diffusion<'a> {
    seq: &'a SnapshotSequence,
    cfg: DiffusionConfig,
    state: Option<DiffusionState>,
    next: usize,
}

impl<'a> Diffusion<'a> {
    pub fn new(seq: &'a SnapshotSequence, cfg: DiffusionConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            seq,
            state: Some(DiffusionState::new(seq.node_count())),
            cfg,
            next: 0,
        })
    }
}

impl Iterator for Diffusion<'_> {
    type Item = Result<StepOutput>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.seq.len() {
            return None;
        }
        let t = self.next;
        self.next += 1;
        let state = self.state.take()?;
        let result = advance(
            self.seq.snapshot(t),
            self.seq.activated(t),
            &state,
            &self.cfg,
        )
        .and_then(|next| {
            let output = emit(&next, &self.cfg)?;
            let diffusion = next.shared_matrix();
            self.state = Some(next);
            Ok(StepOutput {
                t: t + 1,
                output,
                diffusion,
                activated_nodes: self.seq.activated(t).len(),
                activated_edges: self.seq.edge_count(t),
            })
        });
        if result.is_err() {
            self.next = self.seq.len();
        }
        Some(result)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.seq.len() - self.next;
        (left, Some(left))
    }
}

/// Emitted matrices for every snapshot, starting from `X̃_0 = I`.
pub fn run(seq: &SnapshotSequence, cfg: &DiffusionConfig) -> Result<Vec<SparseMatrix>> {
    Diffusion::new(seq, cfg.clone())?
        .map(|r| r.map(|s| s.output))
        .collect()
}
