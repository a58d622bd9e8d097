//! Canonical sparse matrices and the handful of kernels the diffusion needs.
//!
//! [`SparseMatrix`] stores its entries in compressed-column form. Within a
//! column, row indices are strictly increasing, so the entry list read off
//! column by column is the canonical column-major order and two matrices are
//! equal exactly when their entry lists are equal.

mod accumulator;
pub mod io;
mod ops;

pub(crate) use accumulator::Accumulator;
pub(crate) use ops::normalize_column;
pub use ops::{column_normalize, extract_block, row_normalize, spmm, transpose, CANCELLATION_EPS};

use crate::{Error, Result};

/// A real sparse matrix in canonical column-major order.
///
/// Invariants: no duplicate coordinates, no stored zeros, every value finite,
/// every coordinate inside `n_rows x n_cols`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    pub(crate) col_ptr: Vec<usize>,
    pub(crate) row_idx: Vec<usize>,
    pub(crate) values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from coordinate triples in any order.
    ///
    /// Duplicate coordinates are summed and entries that end up exactly zero
    /// are removed.
    pub fn from_triplets<I>(n_rows: usize, n_cols: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut items: Vec<(usize, usize, f64)> = Vec::new();
        for (row, col, value) in triplets {
            if row >= n_rows || col >= n_cols {
                return Err(Error::IndexOutOfBounds {
                    row,
                    col,
                    n_rows,
                    n_cols,
                });
            }
            if !value.is_finite() {
                return Err(Error::NonFinite { row, col });
            }
            items.push((row, col, value));
        }
        items.sort_by_key(|&(r, c, _)| (c, r));

        let mut col_ptr = vec![0usize; n_cols + 1];
        let mut row_idx = Vec::with_capacity(items.len());
        let mut values = Vec::with_capacity(items.len());
        let mut cols = Vec::with_capacity(items.len());
        let mut i = 0;
        while i < items.len() {
            let (r, c, mut v) = items[i];
            i += 1;
            while i < items.len() && items[i].0 == r && items[i].1 == c {
                v += items[i].2;
                i += 1;
            }
            if v != 0.0 {
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: r, col: c });
                }
                row_idx.push(r);
                values.push(v);
                cols.push(c);
            }
        }
        for &c in &cols {
            col_ptr[c + 1] += 1;
        }
        for c in 0..n_cols {
            col_ptr[c + 1] += col_ptr[c];
        }
        Ok(Self {
            n_rows,
            n_cols,
            col_ptr,
            row_idx,
            values,
        })
    }

    /// Assembles a matrix from per-column `(row, value)` lists that are
    /// already sorted by row and free of zeros and duplicates.
    pub(crate) fn from_sorted_columns(n_rows: usize, columns: Vec<Vec<(usize, f64)>>) -> Self {
        let n_cols = columns.len();
        let nnz = columns.iter().map(Vec::len).sum();
        let mut col_ptr = Vec::with_capacity(n_cols + 1);
        let mut row_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        col_ptr.push(0);
        for column in columns {
            for (r, v) in column {
                debug_assert!(r < n_rows);
                debug_assert!(v != 0.0 && v.is_finite());
                row_idx.push(r);
                values.push(v);
            }
            col_ptr.push(row_idx.len());
        }
        let m = Self {
            n_rows,
            n_cols,
            col_ptr,
            row_idx,
            values,
        };
        debug_assert!(m.is_canonical());
        m
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            col_ptr: vec![0; n_cols + 1],
            row_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            col_ptr: (0..=n).collect(),
            row_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Row indices and values of column `col`, sorted by row.
    pub fn column(&self, col: usize) -> (&[usize], &[f64]) {
        let range = self.col_ptr[col]..self.col_ptr[col + 1];
        (&self.row_idx[range.clone()], &self.values[range])
    }

    pub fn column_nnz(&self, col: usize) -> usize {
        self.col_ptr[col + 1] - self.col_ptr[col]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let (rows, vals) = self.column(col);
        match rows.binary_search(&row) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    /// Entries as `(row, col, value)` in canonical column-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_cols).flat_map(move |c| {
            let (rows, vals) = self.column(c);
            rows.iter().zip(vals).map(move |(&r, &v)| (r, c, v))
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.n_cols)
            .map(|c| self.column(c).1.iter().sum())
            .collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_rows];
        for (&r, &v) in self.row_idx.iter().zip(&self.values) {
            sums[r] += v;
        }
        sums
    }

    /// Number of stored entries in each row.
    pub fn row_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_rows];
        for &r in &self.row_idx {
            counts[r] += 1;
        }
        counts
    }

    /// Applies `f` to every stored value; results that are zero are dropped.
    pub fn map_values<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        let columns = (0..self.n_cols)
            .map(|c| {
                let (rows, vals) = self.column(c);
                rows.iter()
                    .zip(vals)
                    .filter_map(|(&r, &v)| {
                        let w = f(v);
                        (w != 0.0).then_some((r, w))
                    })
                    .collect()
            })
            .collect();
        Self::from_sorted_columns(self.n_rows, columns)
    }

    /// Keeps the entries for which `keep(row, col, value)` holds.
    pub fn filter<F: Fn(usize, usize, f64) -> bool>(&self, keep: F) -> Self {
        let columns = (0..self.n_cols)
            .map(|c| {
                let (rows, vals) = self.column(c);
                rows.iter()
                    .zip(vals)
                    .filter(|&(&r, &v)| keep(r, c, v))
                    .map(|(&r, &v)| (r, v))
                    .collect()
            })
            .collect();
        Self::from_sorted_columns(self.n_rows, columns)
    }

    /// `self * lhs_scale + other * rhs_scale`, entry by entry.
    pub fn linear_combination(&self, lhs_scale: f64, other: &Self, rhs_scale: f64) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                op: "linear_combination",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let columns = (0..self.n_cols)
            .map(|c| {
                let (ra, va) = self.column(c);
                let (rb, vb) = other.column(c);
                let mut out = Vec::with_capacity(ra.len() + rb.len());
                let (mut i, mut j) = (0, 0);
                while i < ra.len() || j < rb.len() {
                    let (r, v) = if j >= rb.len() || (i < ra.len() && ra[i] < rb[j]) {
                        i += 1;
                        (ra[i - 1], va[i - 1] * lhs_scale)
                    } else if i >= ra.len() || rb[j] < ra[i] {
                        j += 1;
                        (rb[j - 1], vb[j - 1] * rhs_scale)
                    } else {
                        i += 1;
                        j += 1;
                        (ra[i - 1], va[i - 1] * lhs_scale + vb[j - 1] * rhs_scale)
                    };
                    if v != 0.0 {
                        out.push((r, v));
                    }
                }
                out
            })
            .collect();
        Ok(Self::from_sorted_columns(self.n_rows, columns))
    }

    /// Largest absolute entrywise difference; matrices must share a shape.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        let diff = self.linear_combination(1.0, other, -1.0)?;
        Ok(diff.values.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    }

    fn is_canonical(&self) -> bool {
        self.col_ptr.len() == self.n_cols + 1
            && (0..self.n_cols).all(|c| {
                let (rows, vals) = self.column(c);
                rows.windows(2).all(|w| w[0] < w[1])
                    && rows.iter().all(|&r| r < self.n_rows)
                    && vals.iter().all(|v| *v != 0.0 && v.is_finite())
            })
    }
}

/// A sorted set of node indices drawn from `0..universe`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct NodeSet {
    members: Vec<usize>,
    universe: usize,
}

impl NodeSet {
    pub fn new<I: IntoIterator<Item = usize>>(universe: usize, members: I) -> Result<Self> {
        let mut members: Vec<usize> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        if let Some(&last) = members.last() {
            if last >= universe {
                return Err(Error::NodeOutOfRange {
                    node: last,
                    universe,
                });
            }
        }
        Ok(Self { members, universe })
    }

    pub fn full(universe: usize) -> Self {
        Self {
            members: (0..universe).collect(),
            universe,
        }
    }

    pub fn empty(universe: usize) -> Self {
        Self {
            members: Vec::new(),
            universe,
        }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, node: usize) -> bool {
        self.members.binary_search(&node).is_ok()
    }

    /// Position of `node` within the set, if present.
    pub fn index_of(&self, node: usize) -> Option<usize> {
        self.members.binary_search(&node).ok()
    }

    /// Dense `universe`-sized lookup from node to position in the set.
    pub fn local_index_map(&self) -> Vec<Option<usize>> {
        let mut map = vec![None; self.universe];
        for (i, &m) in self.members.iter().enumerate() {
            map[m] = Some(i);
        }
        map
    }

    pub fn union(&self, other: &NodeSet) -> NodeSet {
        let universe = self.universe.max(other.universe);
        let mut members = self.members.clone();
        members.extend_from_slice(&other.members);
        members.sort_unstable();
        members.dedup();
        NodeSet { members, universe }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_are_canonicalized() {
        let m = SparseMatrix::from_triplets(
            3,
            3,
            vec![(2, 0, 1.0), (0, 1, 2.0), (0, 0, 3.0), (2, 0, 1.0)],
        )
        .unwrap();
        let entries: Vec<_> = m.entries().collect();
        assert_eq!(entries, vec![(0, 0, 3.0), (2, 0, 2.0), (0, 1, 2.0)]);
    }

    #[test]
    fn explicit_zeros_are_removed() {
        let m = SparseMatrix::from_triplets(
            2,
            2,
            vec![(0, 0, 0.0), (1, 1, 1.0), (1, 0, 2.0), (1, 0, -2.0)],
        )
        .unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(1, 1), 1.0);
    }

    #[test]
    fn rejects_out_of_bounds_and_nan() {
        assert!(matches!(
            SparseMatrix::from_triplets(2, 2, vec![(2, 0, 1.0)]),
            Err(Error::IndexOutOfBounds { .. })
        ));
        assert!(matches!(
            SparseMatrix::from_triplets(2, 2, vec![(0, 0, f64::NAN)]),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn node_set_sorts_and_checks_range() {
        let s = NodeSet::new(5, vec![3, 1, 3]).unwrap();
        assert_eq!(s.members(), &[1, 3]);
        assert_eq!(s.index_of(3), Some(1));
        assert!(!s.contains(2));
        assert!(NodeSet::new(3, vec![3]).is_err());
    }

    #[test]
    fn linear_combination_merges_patterns() {
        let a = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 1, 2.0)]).unwrap();
        let b = SparseMatrix::from_triplets(2, 2, vec![(1, 0, 4.0), (1, 1, 2.0)]).unwrap();
        let c = a.linear_combination(1.0, &b, -1.0).unwrap();
        assert_eq!(
            c.entries().collect::<Vec<_>>(),
            vec![(0, 0, 1.0), (1, 0, -4.0)]
        );
    }
}
