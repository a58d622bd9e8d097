//! Benchmark fixtures shared by the criterion targets.

use tiara_core::synthetic::{self, SyntheticParams};
use tiara_core::SnapshotSequence;

/// Undirected synthetic sequence with the given universe and activation size.
pub fn fixture(nodes: usize, activated: usize, steps: usize) -> SnapshotSequence {
    synthetic::generate(&SyntheticParams {
        nodes,
        activated,
        steps,
        density: 4.0,
        seed: 42,
    })
    .expect("valid fixture parameters")
}
