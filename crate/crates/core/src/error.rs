//! Crate-level error type.

use thiserror::Error;

use crate::compression::CompressionError;
use crate::dd::DdError;
use crate::factor::FactorError;
use crate::io::IoError;
use crate::krylov::KrylovError;
use crate::ordering::OrderingError;
use crate::sparse::SparseError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Sparse(#[from] SparseError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Compression(#[from] CompressionError),
    #[error(transparent)]
    Ordering(#[from] OrderingError),
    #[error(transparent)]
    Factor(#[from] FactorError),
    #[error(transparent)]
    Krylov(#[from] KrylovError),
    #[error(transparent)]
    Dd(#[from] DdError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
