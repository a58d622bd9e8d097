use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ingest::SnapshotSequence;
use crate::sparse::{self, SparseMatrix};
use crate::{Error, Result};

/// Walks per independently seeded RNG stream.
const CHUNK: usize = 4096;

/// Outgoing transition table of one snapshot, rows of `D⁻¹A`.
struct Transitions {
    ptr: Vec<usize>,
    targets: Vec<usize>,
    cumulative: Vec<f64>,
}

impl Transitions {
    fn of(a: &SparseMatrix) -> Self {
        // columns of Aᵀ are the rows of A
        let at = sparse::transpose(a);
        let mut ptr = vec![0];
        let mut targets = Vec::with_capacity(at.nnz());
        let mut cumulative = Vec::with_capacity(at.nnz());
        for u in 0..at.n_cols() {
            let (rows, vals) = at.column(u);
            let mut acc = 0.0;
            for (&v, &w) in rows.iter().zip(vals) {
                acc += w;
                targets.push(v);
                cumulative.push(acc);
            }
            ptr.push(targets.len());
        }
        Self {
            ptr,
            targets,
            cumulative,
        }
    }

    fn step(&self, u: usize, rng: &mut ChaCha8Rng) -> usize {
        let (lo, hi) = (self.ptr[u], self.ptr[u + 1]);
        let cum = &self.cumulative[lo..hi];
        let Some(&total) = cum.last() else { return u };
        let x = rng.random::<f64>() * total;
        let k = cum.partition_point(|&s| s <= x).min(cum.len() - 1);
        self.targets[lo + k]
    }
}

/// Estimates column `seed_node` of `X_t` by sampling time-aware walks.
///
/// A sample of `π_t` starts either at the seed or at a fresh sample of
/// `π_{t-1}` (probability `β/(α+β)`), then walks in snapshot `t`, moving with
/// probability `1−α−β` per step. `t` is 1-based. Walks are split into fixed
/// chunks with their own RNG stream, so the result depends only on
/// `rng_seed`.
pub fn monte_carlo_trwr(
    seq: &SnapshotSequence,
    seed_node: usize,
    alpha: f64,
    beta: f64,
    t: usize,
    walks: usize,
    rng_seed: u64,
) -> Result<Vec<f64>> {
    let n = seq.node_count();
    if walks == 0 {
        return Err(Error::InvalidArgument(
            "at least one walk is required".into(),
        ));
    }
    if seed_node >= n {
        return Err(Error::NodeOutOfRange {
            node: seed_node,
            universe: n,
        });
    }
    if t == 0 || t > seq.len() {
        return Err(Error::InvalidArgument(format!(
            "step {t} outside 1..={}",
            seq.len()
        )));
    }
    let c = 1.0 - alpha - beta;
    let gamma = beta / (alpha + beta);
    let tables: Vec<Transitions> = (0..t).map(|s| Transitions::of(seq.snapshot(s))).collect();

    let chunks = walks.div_ceil(CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            rng.set_stream(chunk as u64);
            let len = CHUNK.min(walks - chunk * CHUNK);
            let mut counts = vec![0u64; n];
            for _ in 0..len {
                // level whose walk starts at the seed; reaching level 1 means π_0
                let mut base = t;
                while base > 1 && rng.random::<f64>() < gamma {
                    base -= 1;
                }
                let mut u = seed_node;
                for table in &tables[base - 1..] {
                    while rng.random::<f64>() < c {
                        u = table.step(u, &mut rng);
                    }
                }
                counts[u] += 1;
            }
            counts
        })
        .reduce(
            || vec![0u64; n],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(counts
        .into_iter()
        .map(|k| k as f64 / walks as f64)
        .collect())
}

/// `½ Σ |p − q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{exact_kernel, exact_recurrence, DenseMatrix};

    fn random_seq(n: usize, steps: usize, edges: usize, seed: u64) -> SnapshotSequence {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sets: Vec<Vec<(usize, usize)>> = (0..steps)
            .map(|_| {
                (0..edges)
                    .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
                    .collect()
            })
            .collect();
        SnapshotSequence::from_edge_sets(n, &sets, false).unwrap()
    }

    #[test]
    fn single_node() {
        let seq = SnapshotSequence::from_edge_sets(1, &[vec![]], false).unwrap();
        assert_eq!(
            monte_carlo_trwr(&seq, 0, 0.25, 0.25, 1, 100, 7).unwrap(),
            vec![1.0]
        );
    }

    #[test]
    fn ppr_column_at_one_step() {
        let seq = random_seq(20, 1, 50, 11);
        let a = DenseMatrix::from_sparse(seq.snapshot(0))
            .unwrap()
            .row_normalized()
            .unwrap();
        let exact = exact_kernel(&a, 0.3, 0.0).unwrap().column(4);
        let est = monte_carlo_trwr(&seq, 4, 0.3, 0.0, 1, 1_000_000, 1).unwrap();
        assert!(total_variation(&est, &exact) <= 0.02);
    }

    #[test]
    fn recurrence_column_at_three_steps() {
        let seq = random_seq(10, 3, 15, 12);
        let exact = exact_recurrence(&seq, 0.25, 0.25, 3).unwrap().column(2);
        let est = monte_carlo_trwr(&seq, 2, 0.25, 0.25, 3, 1_000_000, 2).unwrap();
        assert!(total_variation(&est, &exact) <= 0.02);
    }

    #[test]
    fn deterministic_in_seed() {
        let seq = random_seq(10, 2, 15, 13);
        let a = monte_carlo_trwr(&seq, 1, 0.2, 0.3, 2, 10_000, 5).unwrap();
        let b = monte_carlo_trwr(&seq, 1, 0.2, 0.3, 2, 10_000, 5).unwrap();
        assert_eq!(a, b);
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        assert_eq!(
            single.install(|| monte_carlo_trwr(&seq, 1, 0.2, 0.3, 2, 10_000, 5).unwrap()),
            a
        );
    }

    #[test]
    fn error_shrinks_with_more_walks() {
        let seq = random_seq(10, 3, 15, 14);
        let exact = exact_recurrence(&seq, 0.25, 0.25, 3).unwrap().column(0);
        let (mut small, mut large): (Vec<f64>, Vec<f64>) = (0..10)
            .map(|trial| {
                let s = monte_carlo_trwr(&seq, 0, 0.25, 0.25, 3, 20_000, 100 + trial).unwrap();
                let l = monte_carlo_trwr(&seq, 0, 0.25, 0.25, 3, 80_000, 200 + trial).unwrap();
                (total_variation(&s, &exact), total_variation(&l, &exact))
            })
            .unzip();
        let median = |v: &mut Vec<f64>| {
            v.sort_by(f64::total_cmp);
            0.5 * (v[4] + v[5])
        };
        let (ms, ml) = (median(&mut small), median(&mut large));
        assert!(ml <= 0.6 * ms, "median TV {ml} at 4x walks vs {ms}");
    }
}
