use rayon::prelude::*;

use super::{Accumulator, NodeSet, SparseMatrix};
use crate::{Error, Result};

/// Accumulated products with magnitude below this are treated as cancellation
/// noise and not stored.
pub const CANCELLATION_EPS: f64 = 1e-15;

pub fn transpose(m: &SparseMatrix) -> SparseMatrix {
    let mut counts = vec![0usize; m.n_rows + 1];
    for &r in &m.row_idx {
        counts[r + 1] += 1;
    }
    for r in 0..m.n_rows {
        counts[r + 1] += counts[r];
    }
    let col_ptr = counts.clone();
    let mut next = counts;
    let mut row_idx = vec![0usize; m.nnz()];
    let mut values = vec![0.0; m.nnz()];
    // Walking source columns in order leaves each output column sorted.
    for c in 0..m.n_cols {
        let (rows, vals) = m.column(c);
        for (&r, &v) in rows.iter().zip(vals) {
            let slot = next[r];
            row_idx[slot] = c;
            values[slot] = v;
            next[r] += 1;
        }
    }
    SparseMatrix {
        n_rows: m.n_cols,
        n_cols: m.n_rows,
        col_ptr,
        row_idx,
        values,
    }
}

/// Sparse product `a * b`.
///
/// Column `j` of the result is assembled from the columns of `a` selected by
/// the entries of `b[:, j]`, in increasing row order of `b`. Output columns
/// are independent, so the result does not depend on the thread count.
pub fn spmm(a: &SparseMatrix, b: &SparseMatrix) -> Result<SparseMatrix> {
    if a.n_cols != b.n_rows {
        return Err(Error::DimensionMismatch {
            op: "spmm",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let columns: Vec<Vec<(usize, f64)>> = (0..b.n_cols)
        .into_par_iter()
        .map_init(
            || Accumulator::new(a.n_rows),
            |acc, j| {
                let (b_rows, b_vals) = b.column(j);
                for (&k, &bv) in b_rows.iter().zip(b_vals) {
                    let (a_rows, a_vals) = a.column(k);
                    for (&i, &av) in a_rows.iter().zip(a_vals) {
                        acc.add(i, av * bv);
                    }
                }
                acc.drain_sorted(CANCELLATION_EPS)
            },
        )
        .collect();
    Ok(SparseMatrix::from_sorted_columns(a.n_rows, columns))
}

/// `D^{-1} a` with `D = diag(a 1)`: every row sums to one.
pub fn row_normalize(a: &SparseMatrix) -> Result<SparseMatrix> {
    let sums = a.row_sums();
    if let Some(r) = sums.iter().position(|&s| s == 0.0) {
        return Err(Error::EmptyRow(r));
    }
    let columns = (0..a.n_cols)
        .map(|c| {
            let (rows, vals) = a.column(c);
            rows.iter()
                .zip(vals)
                .map(|(&r, &v)| (r, v / sums[r]))
                .collect()
        })
        .collect();
    Ok(SparseMatrix::from_sorted_columns(a.n_rows, columns))
}

/// Scales each nonempty column to sum to one. Empty columns stay empty.
pub fn column_normalize(a: &SparseMatrix) -> SparseMatrix {
    let columns = (0..a.n_cols)
        .map(|c| {
            let (rows, vals) = a.column(c);
            let mut col: Vec<(usize, f64)> =
                rows.iter().copied().zip(vals.iter().copied()).collect();
            normalize_column(&mut col);
            col
        })
        .collect();
    SparseMatrix::from_sorted_columns(a.n_rows, columns)
}

pub(crate) fn normalize_column(col: &mut [(usize, f64)]) {
    let sum: f64 = col.iter().map(|&(_, v)| v).sum();
    if sum != 0.0 {
        for (_, v) in col.iter_mut() {
            *v /= sum;
        }
    }
}

/// Submatrix `a[rows, cols]` reindexed to `0..rows.len()` by `0..cols.len()`.
///
/// Position `p` of the result corresponds to `rows.members()[p]` (and
/// likewise for columns).
pub fn extract_block(a: &SparseMatrix, rows: &NodeSet, cols: &NodeSet) -> Result<SparseMatrix> {
    for (set, bound) in [(rows, a.n_rows), (cols, a.n_cols)] {
        if let Some(&last) = set.members().last() {
            if last >= bound {
                return Err(Error::NodeOutOfRange {
                    node: last,
                    universe: bound,
                });
            }
        }
    }
    let row_map = {
        let mut map = vec![usize::MAX; a.n_rows];
        for (p, &r) in rows.members().iter().enumerate() {
            map[r] = p;
        }
        map
    };
    let columns = cols
        .iter()
        .map(|c| {
            let (rs, vs) = a.column(c);
            rs.iter()
                .zip(vs)
                .filter(|(&r, _)| row_map[r] != usize::MAX)
                .map(|(&r, &v)| (row_map[r], v))
                .collect()
        })
        .collect();
    Ok(SparseMatrix::from_sorted_columns(rows.len(), columns))
}
