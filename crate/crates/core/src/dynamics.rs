//! Output post-processing and node insertion/deletion on the carried state.

use crate::diffusion::DiffusionState;
use crate::sparse::{self, SparseMatrix};
use crate::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PostProcessConfig {
    /// Symmetrize, binarize and apply `D^{-1/2} A D^{-1/2}`.
    pub symmetric_trick: bool,
    /// Replace every stored weight with 1.
    pub drop_weights: bool,
    /// `(X + Xᵀ)/2`, weights kept. Ignored when `symmetric_trick` is set.
    pub undirected_average: bool,
}

/// Applies the configured post-processing to an already oriented output.
pub fn postprocess(x: SparseMatrix, cfg: &PostProcessConfig) -> Result<SparseMatrix> {
    let mut x = x;
    if cfg.symmetric_trick {
        if cfg.undirected_average {
            log::warn!("undirected averaging is subsumed by the symmetric trick and is ignored");
        }
        x = symmetric_trick(&x)?;
    } else if cfg.undirected_average {
        x = undirected_average(&x)?;
    }
    if cfg.drop_weights {
        x = drop_weights(&x);
    }
    Ok(x)
}

fn require_square(x: &SparseMatrix, op: &'static str) -> Result<()> {
    if x.is_square() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            op,
            left: x.shape(),
            right: (x.n_cols(), x.n_rows()),
        })
    }
}

/// `(x + xᵀ)/2`.
pub fn undirected_average(x: &SparseMatrix) -> Result<SparseMatrix> {
    require_square(x, "undirected_average")?;
    x.linear_combination(0.5, &sparse::transpose(x), 0.5)
}

/// Every stored entry replaced by 1.
pub fn drop_weights(x: &SparseMatrix) -> SparseMatrix {
    x.map_values(|_| 1.0)
}

/// Symmetrizes `x`, drops its weights and normalizes the resulting pattern
/// as `D^{-1/2} A D^{-1/2}`, so entry `(i, j)` becomes `1/sqrt(d_i d_j)`.
pub fn symmetric_trick(x: &SparseMatrix) -> Result<SparseMatrix> {
    require_square(x, "symmetric_trick")?;
    let pattern = drop_weights(&undirected_average(x)?);
    let degrees = pattern.row_counts();
    if let Some(v) = degrees.iter().position(|&d| d == 0) {
        return Err(Error::IsolatedNode(v));
    }
    let inv_sqrt: Vec<f64> = degrees.iter().map(|&d| 1.0 / (d as f64).sqrt()).collect();
    // map row and col scaling over the binary pattern
    let scaled = SparseMatrix::from_triplets(
        pattern.n_rows(),
        pattern.n_cols(),
        pattern
            .entries()
            .map(|(r, c, _)| (r, c, inv_sqrt[r] * inv_sqrt[c])),
    )?;
    Ok(scaled)
}

/// Appends a new node with index `n` whose column and row are `e_n`.
pub fn insert_node(state: &DiffusionState) -> DiffusionState {
    let x = state.matrix();
    let n = x.n_rows();
    let grown = SparseMatrix::from_triplets(n + 1, n + 1, x.entries().chain([(n, n, 1.0)]))
        .expect("entries of a valid matrix stay valid");
    DiffusionState::from_matrix(grown, state.t())
        .expect("inserting a node keeps columns stochastic")
}

/// Index bookkeeping returned by [`delete_node`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeRemoval {
    /// Old index -> new index; the deleted node maps to `None`.
    pub remap: Vec<Option<usize>>,
    /// New indices of columns whose only mass sat on the deleted node. They
    /// are left empty.
    pub emptied_columns: Vec<usize>,
}

/// Removes row and column `u`, shifts later indices down by one and
/// renormalizes the columns that lost mass.
pub fn delete_node(state: &DiffusionState, u: usize) -> Result<(DiffusionState, NodeRemoval)> {
    let x = state.matrix();
    let n = x.n_rows();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "cannot delete the last remaining node".into(),
        ));
    }
    if u >= n {
        return Err(Error::NodeOutOfRange {
            node: u,
            universe: n,
        });
    }
    let remap: Vec<Option<usize>> = (0..n)
        .map(|v| match v.cmp(&u) {
            std::cmp::Ordering::Less => Some(v),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(v - 1),
        })
        .collect();
    let mut emptied_columns = Vec::new();
    let columns = (0..n)
        .filter(|&c| c != u)
        .map(|c| {
            let (rows, vals) = x.column(c);
            let lost = rows.binary_search(&u).is_ok();
            let mut col: Vec<(usize, f64)> = rows
                .iter()
                .zip(vals)
                .filter(|(&r, _)| r != u)
                .map(|(&r, &v)| (remap[r].unwrap(), v))
                .collect();
            // columns that kept all their mass are already stochastic
            if lost {
                if col.is_empty() {
                    emptied_columns.push(remap[c].unwrap());
                }
                sparse::normalize_column(&mut col);
            }
            col
        })
        .collect();
    let shrunk = SparseMatrix::from_sorted_columns(n - 1, columns);
    let next = DiffusionState::from_matrix(shrunk, state.t())?;
    Ok((
        next,
        NodeRemoval {
            remap,
            emptied_columns,
        },
    ))
}
