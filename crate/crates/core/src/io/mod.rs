//! File formats: Matrix Market, the binary CSR cache and partition files.

mod cache;
mod mm;
mod partition_file;

pub use cache::{decode_csr_cache, is_csr_cache, read_csr_cache, write_csr_cache};
pub use mm::{
    load_matrix_market, read_matrix_market, save_matrix_market, write_matrix_market, ReadLimits,
};
pub use partition_file::{
    parse_block_partition, parse_domain_assignment, write_block_partition, write_domain_assignment,
};

use std::path::Path;

use thiserror::Error;

use crate::sparse::CsrMatrix;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot open {path}: {source}")]
    Open {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid CSR cache: {0}")]
    Cache(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Loads a matrix from either a Matrix Market file or a binary CSR cache,
/// chosen by content.
pub fn load_matrix(path: impl AsRef<Path>) -> Result<CsrMatrix, IoError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| IoError::Open {
        path: path.display().to_string(),
        source: e,
    })?;
    if is_csr_cache(&bytes) {
        decode_csr_cache(&bytes)
    } else {
        read_matrix_market(&bytes[..], ReadLimits::default())
    }
}
