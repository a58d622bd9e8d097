//! Time-aware random-walk diffusion for discrete-time dynamic graphs.
//!
//! The crate turns a sequence of graph snapshots into a sequence of sparse,
//! column-stochastic diffusion matrices that blend a per-snapshot random walk
//! with restart (spatial locality) with the diffusion carried over from earlier
//! snapshots (temporal locality). The main entry points are
//! [`ingest::parse_edge_list`], [`ingest::bin_snapshots`] and
//! [`diffusion::run`]; [`oracle`] holds dense and Monte-Carlo reference
//! implementations used for verification.

pub mod diffusion;
pub mod dynamics;
mod error;
pub mod ingest;
pub mod manifest;
pub mod oracle;
pub mod sparse;
pub mod synthetic;
pub mod verify;

pub use diffusion::{DiffusionConfig, DiffusionState, Kernel};
pub use dynamics::PostProcessConfig;
pub use error::{Error, Result};
pub use ingest::{SnapshotSequence, TemporalEdgeList};
pub use manifest::RunManifest;
pub use sparse::{NodeSet, SparseMatrix};
