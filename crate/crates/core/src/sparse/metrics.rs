use super::{BlockPartition, CsrMatrix, SparseError};

/// Quality of a block ordering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockMetrics {
    /// `nnz(A)` over the cells covered by stored blocks.
    pub av_bd: f64,
    /// Mean diagonal block dimension.
    pub av_bs: f64,
    pub n_blocks: usize,
    /// Stored blocks (diagonal and off-diagonal).
    pub n_stored_blocks: usize,
    pub covered_cells: usize,
    pub padded_zeros: usize,
}

/// Block density and size of `a` under `partition`, computed from the
/// pattern without building the block matrix. `a` does not need to be
/// permuted; only `block_of` is consulted.
pub fn block_metrics(
    a: &CsrMatrix,
    partition: &BlockPartition,
) -> Result<BlockMetrics, SparseError> {
    if !a.is_square() {
        return Err(SparseError::NotSquare {
            rows: a.n_rows(),
            cols: a.n_cols(),
        });
    }
    if partition.len() != a.n_rows() {
        return Err(SparseError::DimensionMismatch {
            expected: a.n_rows(),
            got: partition.len(),
        });
    }
    let block_of = partition.block_of();
    let sizes = partition.block_sizes();
    let groups = partition.groups();
    let mut seen = vec![usize::MAX; partition.n_blocks()];
    let mut covered = 0usize;
    let mut stored = 0usize;
    for (bi, members) in groups.iter().enumerate() {
        for &i in members {
            for &c in a.row(i).0 {
                let bj = block_of[c];
                if seen[bj] != bi {
                    seen[bj] = bi;
                    covered += sizes[bi] * sizes[bj];
                    stored += 1;
                }
            }
        }
    }
    let n_blocks = partition.n_blocks();
    Ok(BlockMetrics {
        av_bd: if covered == 0 {
            1.0
        } else {
            a.nnz() as f64 / covered as f64
        },
        av_bs: if n_blocks == 0 {
            0.0
        } else {
            a.n_rows() as f64 / n_blocks as f64
        },
        n_blocks,
        n_stored_blocks: stored,
        covered_cells: covered,
        padded_zeros: covered - a.nnz(),
    })
}
