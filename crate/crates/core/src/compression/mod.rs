//! Discovery of exact and approximate dense block structure.

mod angle;
mod exact;
mod graph;
mod quotient;

pub use angle::angle_blocking;
pub use exact::{checksum_keys, exact_blocking};
pub use graph::{graph_blocking, graph_blocking_with_stats, GraphBlocking};
pub use quotient::{build_quotient_graph, QuotientGraph};

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::sparse::{symmetrized_pattern, BlockPartition, CsrMatrix, SparseError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompressionError {
    #[error("{name} = {value} is outside (0, 1]")]
    ParameterOutOfRange { name: &'static str, value: f64 },
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompressionMethod {
    Checksum,
    Angle,
    Graph,
}

impl fmt::Display for CompressionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Checksum => "checksum",
            Self::Angle => "angle",
            Self::Graph => "graph",
        })
    }
}

impl FromStr for CompressionMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "checksum" => Ok(Self::Checksum),
            "angle" => Ok(Self::Angle),
            "graph" => Ok(Self::Graph),
            other => Err(format!("unknown compression method '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressionParams {
    pub method: CompressionMethod,
    /// Angle threshold.
    pub tau: f64,
    /// Density floor for the graph method.
    pub mu: f64,
}

impl Default for CompressionParams {
    fn default() -> Self {
        Self {
            method: CompressionMethod::Graph,
            tau: 0.8,
            mu: 0.7,
        }
    }
}

impl CompressionParams {
    pub fn validate(&self) -> Result<(), CompressionError> {
        for (name, value) in [("tau", self.tau), ("mu", self.mu)] {
            if !(value > 0.0 && value <= 1.0) {
                return Err(CompressionError::ParameterOutOfRange { name, value });
            }
        }
        Ok(())
    }
}

/// Runs the configured compression method on `a`.
pub fn compress(
    a: &CsrMatrix,
    params: &CompressionParams,
) -> Result<BlockPartition, CompressionError> {
    params.validate()?;
    match params.method {
        CompressionMethod::Checksum => Ok(exact_blocking(&symmetrized_pattern(a)?)),
        CompressionMethod::Angle => angle_blocking(a, params.tau),
        CompressionMethod::Graph => graph_blocking(a, params.mu),
    }
}
