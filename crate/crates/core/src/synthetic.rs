//! Random dynamic graphs for tests and scaling runs.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::SnapshotSequence;
use crate::{Error, Result};

/// Parameters of [`generate`].
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SyntheticParams {
    /// Node universe size.
    pub nodes: usize,
    /// Activated nodes per snapshot.
    pub activated: usize,
    pub steps: usize,
    /// Target mean of directed edge entries per activated node.
    pub density: f64,
    pub seed: u64,
}

/// Undirected snapshots where each step activates exactly
/// `params.activated` nodes drawn uniformly from the universe.
///
/// The chosen nodes are first paired along a random cycle so none is left
/// isolated, then random extra edges are added until the directed entry count
/// reaches `density * activated`.
pub fn generate(params: &SyntheticParams) -> Result<SnapshotSequence> {
    let SyntheticParams {
        nodes,
        activated,
        steps,
        density,
        seed,
    } = *params;
    if activated < 2 || activated > nodes {
        return Err(Error::InvalidConfig(format!(
            "activated nodes per step must lie in 2..={nodes}, got {activated}"
        )));
    }
    if steps == 0 {
        return Err(Error::InvalidConfig("at least one step is required".into()));
    }
    if !(density.is_finite() && density > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "density must be positive, got {density}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sets = Vec::with_capacity(steps);
    for _ in 0..steps {
        let chosen = index::sample(&mut rng, nodes, activated).into_vec();
        let undirected_target = ((density * activated as f64) / 2.0).round() as usize;
        let cover = if activated == 2 { 1 } else { activated };
        let mut edges = Vec::with_capacity(undirected_target.max(cover));
        for i in 0..cover {
            edges.push((chosen[i], chosen[(i + 1) % activated]));
        }
        while edges.len() < undirected_target {
            let u = chosen[rng.random_range(0..activated)];
            let v = chosen[rng.random_range(0..activated)];
            if u != v {
                edges.push((u, v));
            }
        }
        sets.push(edges);
    }
    SnapshotSequence::from_edge_sets(nodes, &sets, true)
}

/// Directed snapshots with `edges_per_step` uniformly random pairs each.
/// Self-loop draws are kept and are no-ops, so nodes may stay idle.
pub fn random_sequence(
    nodes: usize,
    steps: usize,
    edges_per_step: usize,
    seed: u64,
) -> Result<SnapshotSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sets: Vec<Vec<(usize, usize)>> = (0..steps)
        .map(|_| {
            (0..edges_per_step)
                .map(|_| (rng.random_range(0..nodes), rng.random_range(0..nodes)))
                .collect()
        })
        .collect();
    SnapshotSequence::from_edge_sets(nodes, &sets, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::SequenceStats;

    #[test]
    fn activates_the_requested_count() {
        let params = SyntheticParams {
            nodes: 1000,
            activated: 100,
            steps: 4,
            density: 4.0,
            seed: 9,
        };
        let seq = generate(&params).unwrap();
        assert_eq!(seq.len(), 4);
        for t in 0..4 {
            assert_eq!(seq.activated(t).len(), 100);
        }
        let stats = SequenceStats::of(&seq);
        // duplicate draws merge, so density can only fall short of the target
        assert!(stats.density() <= 4.0 && stats.density() > 3.5);
        assert_eq!(generate(&params).unwrap().snapshot(2), seq.snapshot(2));
    }

    #[test]
    fn rejects_bad_params() {
        let base = SyntheticParams {
            nodes: 10,
            activated: 5,
            steps: 1,
            density: 2.0,
            seed: 0,
        };
        assert!(generate(&SyntheticParams {
            activated: 11,
            ..base.clone()
        })
        .is_err());
        assert!(generate(&SyntheticParams {
            steps: 0,
            ..base.clone()
        })
        .is_err());
        assert!(generate(&SyntheticParams {
            density: 0.0,
            ..base
        })
        .is_err());
    }

    #[test]
    fn two_node_steps() {
        let seq = generate(&SyntheticParams {
            nodes: 2,
            activated: 2,
            steps: 1,
            density: 1.0,
            seed: 1,
        })
        .unwrap();
        assert_eq!(seq.edge_count(0), 2);
    }
}
