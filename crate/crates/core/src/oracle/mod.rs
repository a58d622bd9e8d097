//! Dense and stochastic reference implementations.
//!
//! Everything here is `O(n³)` or sampling based and meant for small
//! instances: it recomputes the diffusion from its defining equations rather
//! than from the sparse pipeline, so the two can be checked against each
//! other.

mod dense;
mod monte_carlo;

pub use dense::{
    closed_form, eigenvalue_error, eigenvalues, exact_kernel, exact_recurrence, kernels,
    DenseMatrix, DENSE_LIMIT,
};
pub use monte_carlo::{monte_carlo_trwr, total_variation};
