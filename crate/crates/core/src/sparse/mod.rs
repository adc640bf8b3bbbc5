//! Sparse storage and the block-structure vocabulary shared by every other
//! module.

mod csr;
mod metrics;
mod partition;
mod pattern;
mod perm;
mod vbcsr;

pub use csr::CsrMatrix;
pub use metrics::{block_metrics, BlockMetrics};
pub use partition::{BlockLayout, BlockPartition};
pub use pattern::{symmetrized_pattern, Adjacency};
pub use perm::Permutation;
pub use vbcsr::{to_vbcsr, BlockRow, VbcsrMatrix};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SparseError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("invalid CSR structure: {0}")]
    InvalidCsr(String),
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("invalid block partition: {0}")]
    InvalidPartition(String),
}
