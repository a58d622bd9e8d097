use std::io;

/// Errors raised by the diffusion engine and its supporting modules.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("entry ({row}, {col}) outside a {n_rows}x{n_cols} matrix")]
    IndexOutOfBounds {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },
    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("row {0} is empty and cannot be normalized (missing self-loop?)")]
    EmptyRow(usize),
    #[error("node {node} outside a universe of {universe} nodes")]
    NodeOutOfRange { node: usize, universe: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("input contains no edges")]
    EmptyInput,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("node {0} has zero degree after binarization")]
    IsolatedNode(usize),
    #[error("dense oracle limited to {limit} nodes, got {n}")]
    TooLarge { n: usize, limit: usize },
    #[error("singular system in dense solve")]
    Singular,
    #[error("eigensolver did not converge")]
    EigenNoConvergence,
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
