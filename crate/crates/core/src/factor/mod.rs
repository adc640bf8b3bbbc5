//! Multilevel variable-block ILU (VBARMS) factorization and solve.

mod ilut;
mod vbarms;

pub use ilut::{block_ilut, factorize_level, BlockFactors};
pub use vbarms::{
    vbarms_factorize, vbarms_solve, ForwardState, LastLevel, LastLevelMap, LevelFactor,
    VbarmsPreconditioner,
};

use thiserror::Error;

use crate::compression::{CompressionError, CompressionParams};
use crate::ordering::OrderingError;
use crate::sparse::SparseError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FactorError {
    #[error("singular pivot at level {level}, block row {block_row} (|pivot| = {magnitude:e})")]
    SingularPivot {
        level: usize,
        block_row: usize,
        magnitude: f64,
    },
    #[error("missing diagonal block at level {level}, block row {block_row}")]
    MissingDiagonal { level: usize, block_row: usize },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("invalid factorization parameter: {0}")]
    InvalidParams(String),
    #[error("scaling failed at level {level}: {source}")]
    Scaling {
        level: usize,
        #[source]
        source: OrderingError,
    },
    #[error(transparent)]
    Compression(#[from] CompressionError),
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorParams {
    /// Block drop threshold `t`: a block `B` is dropped when
    /// `||B||_F / (rows * cols) < t`.
    pub drop_tol: f64,
    pub max_levels: usize,
    /// Recursion stops once the Schur complement has at most this many rows.
    pub min_schur_size: usize,
    /// Optional cap on the off-diagonal blocks kept per row of the
    /// last-level factors.
    pub last_level_fill: Option<usize>,
    pub compression: CompressionParams,
    /// Factor the last Schur complement with dense LU when it has at most
    /// [`EXACT_LAST_LEVEL_MAX`] rows.
    pub exact_last_level: bool,
}

/// Largest last level handled by the dense fallback.
pub const EXACT_LAST_LEVEL_MAX: usize = 200;

impl Default for FactorParams {
    fn default() -> Self {
        Self {
            drop_tol: 1e-2,
            max_levels: 4,
            min_schur_size: 200,
            last_level_fill: None,
            compression: CompressionParams::default(),
            exact_last_level: false,
        }
    }
}

impl FactorParams {
    pub fn validate(&self) -> Result<(), FactorError> {
        if !(self.drop_tol >= 0.0) {
            return Err(FactorError::InvalidParams(format!(
                "drop tolerance {} must be >= 0",
                self.drop_tol
            )));
        }
        if self.max_levels == 0 {
            return Err(FactorError::InvalidParams("max_levels must be >= 1".into()));
        }
        self.compression.validate()?;
        Ok(())
    }
}
