use nalgebra::{Complex, DMatrix};

use crate::ingest::SnapshotSequence;
use crate::sparse::SparseMatrix;
use crate::{Error, Result};

/// Largest dimension the dense oracle accepts.
pub const DENSE_LIMIT: usize = 512;

/// Small row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Result<Self> {
        let n = n_rows.max(n_cols);
        if n > DENSE_LIMIT {
            return Err(Error::TooLarge {
                n,
                limit: DENSE_LIMIT,
            });
        }
        Ok(Self {
            n_rows,
            n_cols,
            values: vec![0.0; n_rows * n_cols],
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        Ok(m)
    }

    pub fn from_sparse(m: &SparseMatrix) -> Result<Self> {
        let mut d = Self::zeros(m.n_rows(), m.n_cols())?;
        for (r, c, v) in m.entries() {
            d.set(r, c, v);
        }
        Ok(d)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.n_cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.values[r * self.n_cols + c] = v;
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.n_rows).map(|r| self.get(r, c)).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.n_cols)
            .map(|c| self.column(c).iter().sum())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            values: vec![0.0; self.values.len()],
        };
        for r in 0..self.n_rows {
            for c in 0..self.n_cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.n_cols != other.n_rows {
            return Err(Error::DimensionMismatch {
                op: "dense matmul",
                left: (self.n_rows, self.n_cols),
                right: (other.n_rows, other.n_cols),
            });
        }
        Ok(Self::from_nalgebra(
            &(self.to_nalgebra() * other.to_nalgebra()),
        ))
    }

    /// `self * a + other * b`.
    pub fn axpby(&self, a: f64, other: &Self, b: f64) -> Self {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        Self {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs()))
    }

    /// `D^{-1} self` with `D` the row sums.
    pub fn row_normalized(&self) -> Result<Self> {
        let mut out = self.clone();
        for r in 0..self.n_rows {
            let sum: f64 = (0..self.n_cols).map(|c| self.get(r, c)).sum();
            if sum == 0.0 {
                return Err(Error::EmptyRow(r));
            }
            for c in 0..self.n_cols {
                out.set(r, c, self.get(r, c) / sum);
            }
        }
        Ok(out)
    }

    /// Solves `self * X = rhs` by LU with partial pivoting.
    pub fn solve(&self, rhs: &Self) -> Result<Self> {
        let lu = self.to_nalgebra().lu();
        lu.solve(&rhs.to_nalgebra())
            .map(|x| Self::from_nalgebra(&x))
            .ok_or(Error::Singular)
    }

    fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n_rows, self.n_cols, &self.values)
    }

    fn from_nalgebra(m: &DMatrix<f64>) -> Self {
        let (n_rows, n_cols) = m.shape();
        let mut values = Vec::with_capacity(n_rows * n_cols);
        for r in 0..n_rows {
            for c in 0..n_cols {
                values.push(m[(r, c)]);
            }
        }
        Self {
            n_rows,
            n_cols,
            values,
        }
    }
}

/// `(α+β)(I − (1−α−β)Ãᵀ)⁻¹` for a row-stochastic `a_norm`.
pub fn exact_kernel(a_norm: &DenseMatrix, alpha: f64, beta: f64) -> Result<DenseMatrix> {
    let mut k = inverse_system(a_norm, alpha, beta)?;
    k.values.iter_mut().for_each(|v| *v *= alpha + beta);
    Ok(k)
}

/// `L⁻¹ = (I − cÃᵀ)⁻¹`.
fn inverse_system(a_norm: &DenseMatrix, alpha: f64, beta: f64) -> Result<DenseMatrix> {
    let n = a_norm.n_rows;
    let c = 1.0 - alpha - beta;
    let l = DenseMatrix::identity(n)?.axpby(1.0, &a_norm.transpose(), -c);
    l.solve(&DenseMatrix::identity(n)?)
}

fn normalized_snapshot(seq: &SnapshotSequence, t: usize) -> Result<DenseMatrix> {
    DenseMatrix::from_sparse(seq.snapshot(t))?.row_normalized()
}

fn check_step(seq: &SnapshotSequence, t: usize) -> Result<()> {
    if t > seq.len() {
        return Err(Error::InvalidArgument(format!(
            "step {t} beyond a sequence of length {}",
            seq.len()
        )));
    }
    Ok(())
}

/// Exact kernels `Ľ_1 … Ľ_t` of the first `t` snapshots.
pub fn kernels(
    seq: &SnapshotSequence,
    alpha: f64,
    beta: f64,
    t: usize,
) -> Result<Vec<DenseMatrix>> {
    check_step(seq, t)?;
    (0..t)
        .map(|s| exact_kernel(&normalized_snapshot(seq, s)?, alpha, beta))
        .collect()
}

/// `X_t` from `X_s = αL_s⁻¹ + βL_s⁻¹X_{s-1}`, `X_0 = I`. `t` is 1-based.
pub fn exact_recurrence(
    seq: &SnapshotSequence,
    alpha: f64,
    beta: f64,
    t: usize,
) -> Result<DenseMatrix> {
    check_step(seq, t)?;
    let n = seq.node_count();
    let identity = DenseMatrix::identity(n)?;
    let mut x = identity.clone();
    for s in 0..t {
        let a_norm = normalized_snapshot(seq, s)?;
        let c = 1.0 - alpha - beta;
        let l = identity.axpby(1.0, &a_norm.transpose(), -c);
        let rhs = identity.axpby(alpha, &x, beta);
        x = l.solve(&rhs)?;
    }
    Ok(x)
}

/// `X_t = (1−γ) Σ_{i=0}^{t−2} γ^i Ľ_{t⇜t−i} + γ^{t−1} Ľ_{t⇜1}` where
/// `Ľ_{j⇜i} = Ľ_j Ľ_{j−1} ⋯ Ľ_i`. `t` is 1-based and at least 1.
pub fn closed_form(seq: &SnapshotSequence, alpha: f64, beta: f64, t: usize) -> Result<DenseMatrix> {
    if t == 0 {
        return Err(Error::InvalidArgument("closed form starts at t = 1".into()));
    }
    let ks = kernels(seq, alpha, beta, t)?;
    let gamma = beta / (alpha + beta);
    let n = seq.node_count();
    let mut sum = DenseMatrix::zeros(n, n)?;
    // chain = Ľ_t Ľ_{t-1} ⋯ Ľ_{t-i}
    let mut chain = ks[t - 1].clone();
    for i in 0..t {
        if i > 0 {
            chain = chain.matmul(&ks[t - 1 - i])?;
        }
        let weight = if i + 1 == t {
            gamma.powi(i as i32)
        } else {
            (1.0 - gamma) * gamma.powi(i as i32)
        };
        sum = sum.axpby(1.0, &chain, weight);
    }
    Ok(sum)
}

/// Eigenvalues of a square dense matrix.
///
/// The matrix is split along the strongly connected components of its
/// pattern; in that order it is block triangular, so the spectrum is the union
/// of the diagonal blocks' spectra. Each block goes through a real Schur
/// decomposition. Exactly structured blocks (permutation-like ones left over
/// by sparsification) can stall the shifted QR iteration, so a stalled block
/// is retried after a random orthogonal similarity.
pub fn eigenvalues(m: &DenseMatrix) -> Result<Vec<Complex<f64>>> {
    if m.n_rows != m.n_cols {
        return Err(Error::DimensionMismatch {
            op: "eigenvalues",
            left: (m.n_rows, m.n_cols),
            right: (m.n_cols, m.n_rows),
        });
    }
    let mut out = Vec::with_capacity(m.n_rows);
    for comp in strongly_connected(m) {
        if let [i] = comp[..] {
            out.push(Complex::new(m.get(i, i), 0.0));
            continue;
        }
        let block = DMatrix::from_fn(comp.len(), comp.len(), |r, c| m.get(comp[r], comp[c]));
        out.extend(block_eigenvalues(block)?);
    }
    Ok(out)
}

fn block_eigenvalues(block: DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    use nalgebra::linalg::Schur;
    use rand::{Rng, SeedableRng};

    const ATTEMPTS: u64 = 4;
    const MAX_SWEEPS: usize = 10_000;
    if let Some(schur) = Schur::try_new(block.clone(), f64::EPSILON, MAX_SWEEPS) {
        return Ok(schur.complex_eigenvalues().iter().copied().collect());
    }
    let k = block.nrows();
    for attempt in 0..ATTEMPTS {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(attempt);
        let q = DMatrix::from_fn(k, k, |_, _| rng.random::<f64>() - 0.5)
            .qr()
            .q();
        let rotated = q.transpose() * &block * &q;
        if let Some(schur) = Schur::try_new(rotated, f64::EPSILON, MAX_SWEEPS) {
            return Ok(schur.complex_eigenvalues().iter().copied().collect());
        }
    }
    Err(Error::EigenNoConvergence)
}

/// Tarjan's strongly connected components of the pattern `i -> j` for
/// `m[i][j] != 0`, iterative.
fn strongly_connected(m: &DenseMatrix) -> Vec<Vec<usize>> {
    let n = m.n_rows;
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i && m.get(i, j) != 0.0).collect())
        .collect();
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut next = 0;
    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        // (node, position in its adjacency list)
        let mut call = vec![(root, 0usize)];
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if let Some(&w) = adj[v].get(*pos) {
                *pos += 1;
                if index[w] == UNSEEN {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("component root is on the stack");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                comps.push(comp);
            }
        }
    }
    comps
}

/// `‖λ − λ̃‖₂` between the spectra of `x_exact` and `x_sparse`, each sorted by
/// real part then imaginary part, descending.
pub fn eigenvalue_error(x_exact: &DenseMatrix, x_sparse: &SparseMatrix) -> Result<f64> {
    let other = DenseMatrix::from_sparse(x_sparse)?;
    if (other.n_rows, other.n_cols) != (x_exact.n_rows, x_exact.n_cols) {
        return Err(Error::DimensionMismatch {
            op: "eigenvalue_error",
            left: (x_exact.n_rows, x_exact.n_cols),
            right: x_sparse.shape(),
        });
    }
    let sorted = |m: &DenseMatrix| -> Result<Vec<Complex<f64>>> {
        let mut ev = eigenvalues(m)?;
        ev.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
        Ok(ev)
    };
    let (a, b) = (sorted(x_exact)?, sorted(&other)?);
    Ok(a.iter()
        .zip(&b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt())
}
