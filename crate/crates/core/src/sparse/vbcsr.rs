use super::{BlockLayout, BlockPartition, CsrMatrix, SparseError};

/// Variable-block CSR matrix.
///
/// Block rows and columns follow two [`BlockLayout`]s. Each stored block
/// `(I, J)` is a dense row-major array of shape `size(I) x size(J)`; the
/// blocks live back to back in one value buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct VbcsrMatrix {
    rows: BlockLayout,
    cols: BlockLayout,
    block_row_ptr: Vec<usize>,
    block_col_idx: Vec<usize>,
    block_ptr: Vec<usize>,
    values: Vec<f64>,
    padded_zeros: usize,
}

/// A block row under construction: `(block column, dense block)` pairs.
pub type BlockRow = Vec<(usize, Vec<f64>)>;

impl VbcsrMatrix {
    /// Converts `a` to block form. A block is stored iff at least one entry
    /// of `a` falls inside it.
    pub fn from_csr(
        a: &CsrMatrix,
        rows: &BlockLayout,
        cols: &BlockLayout,
    ) -> Result<Self, SparseError> {
        if rows.dim() != a.n_rows() {
            return Err(SparseError::DimensionMismatch {
                expected: a.n_rows(),
                got: rows.dim(),
            });
        }
        if cols.dim() != a.n_cols() {
            return Err(SparseError::DimensionMismatch {
                expected: a.n_cols(),
                got: cols.dim(),
            });
        }
        let col_block = cols.block_of();
        let mut slot = vec![usize::MAX; cols.n_blocks()];
        let mut block_row_ptr = vec![0];
        let mut block_col_idx = Vec::new();
        let mut block_ptr = vec![0];
        let mut values = Vec::new();
        for bi in 0..rows.n_blocks() {
            let first = block_col_idx.len();
            for i in rows.range(bi) {
                for &c in a.row(i).0 {
                    let bj = col_block[c];
                    if slot[bj] == usize::MAX {
                        slot[bj] = 0;
                        block_col_idx.push(bj);
                    }
                }
            }
            block_col_idx[first..].sort_unstable();
            let m = rows.size(bi);
            for k in first..block_col_idx.len() {
                let bj = block_col_idx[k];
                slot[bj] = values.len();
                values.resize(values.len() + m * cols.size(bj), 0.0);
                block_ptr.push(values.len());
            }
            for (local_i, i) in rows.range(bi).enumerate() {
                let (rc, rv) = a.row(i);
                for (&c, &v) in rc.iter().zip(rv) {
                    let bj = col_block[c];
                    let n = cols.size(bj);
                    values[slot[bj] + local_i * n + (c - cols.start(bj))] = v;
                }
            }
            for &bj in &block_col_idx[first..] {
                slot[bj] = usize::MAX;
            }
            block_row_ptr.push(block_col_idx.len());
        }
        let padded_zeros = values.len() - a.nnz();
        Ok(Self {
            rows: rows.clone(),
            cols: cols.clone(),
            block_row_ptr,
            block_col_idx,
            block_ptr,
            values,
            padded_zeros,
        })
    }

    /// Assembles a matrix from block rows. Each row's blocks must have
    /// distinct column ids; they are sorted here.
    pub fn from_block_rows(
        rows: BlockLayout,
        cols: BlockLayout,
        block_rows: Vec<BlockRow>,
    ) -> Result<Self, SparseError> {
        if block_rows.len() != rows.n_blocks() {
            return Err(SparseError::DimensionMismatch {
                expected: rows.n_blocks(),
                got: block_rows.len(),
            });
        }
        let mut block_row_ptr = vec![0];
        let mut block_col_idx = Vec::new();
        let mut block_ptr = vec![0];
        let mut values = Vec::new();
        for (bi, mut row) in block_rows.into_iter().enumerate() {
            row.sort_unstable_by_key(|b| b.0);
            for (k, (bj, data)) in row.into_iter().enumerate() {
                if bj >= cols.n_blocks() {
                    return Err(SparseError::InvalidCsr(format!(
                        "block column {bj} out of range"
                    )));
                }
                if k > 0 && *block_col_idx.last().unwrap() == bj {
                    return Err(SparseError::InvalidCsr(format!(
                        "duplicate block ({bi}, {bj})"
                    )));
                }
                if data.len() != rows.size(bi) * cols.size(bj) {
                    return Err(SparseError::InvalidCsr(format!(
                        "block ({bi}, {bj}) has {} values, expected {}",
                        data.len(),
                        rows.size(bi) * cols.size(bj)
                    )));
                }
                block_col_idx.push(bj);
                values.extend_from_slice(&data);
                block_ptr.push(values.len());
            }
            block_row_ptr.push(block_col_idx.len());
        }
        let padded_zeros = values.iter().filter(|&&v| v == 0.0).count();
        Ok(Self {
            rows,
            cols,
            block_row_ptr,
            block_col_idx,
            block_ptr,
            values,
            padded_zeros,
        })
    }

    pub fn row_layout(&self) -> &BlockLayout {
        &self.rows
    }

    pub fn col_layout(&self) -> &BlockLayout {
        &self.cols
    }

    pub fn n_rows(&self) -> usize {
        self.rows.dim()
    }

    pub fn n_cols(&self) -> usize {
        self.cols.dim()
    }

    pub fn n_block_rows(&self) -> usize {
        self.rows.n_blocks()
    }

    pub fn n_stored_blocks(&self) -> usize {
        self.block_col_idx.len()
    }

    /// Number of scalar cells held in stored blocks, padding included.
    pub fn stored_cells(&self) -> usize {
        self.values.len()
    }

    pub fn padded_zeros(&self) -> usize {
        self.padded_zeros
    }

    pub fn block_row_ptr(&self) -> &[usize] {
        &self.block_row_ptr
    }

    pub fn block_col_idx(&self) -> &[usize] {
        &self.block_col_idx
    }

    /// Dense data of the `k`-th stored block.
    #[inline]
    pub fn block(&self, k: usize) -> &[f64] {
        &self.values[self.block_ptr[k]..self.block_ptr[k + 1]]
    }

    /// Stored blocks of block row `bi` as `(block column, data)`.
    pub fn block_row(&self, bi: usize) -> impl Iterator<Item = (usize, &[f64])> + '_ {
        (self.block_row_ptr[bi]..self.block_row_ptr[bi + 1])
            .map(move |k| (self.block_col_idx[k], self.block(k)))
    }

    /// Owned copy of block row `bi`.
    pub fn block_row_owned(&self, bi: usize) -> BlockRow {
        self.block_row(bi).map(|(j, d)| (j, d.to_vec())).collect()
    }

    /// Flattens to CSR, dropping zeros (padding and computed zeros alike).
    pub fn to_csr(&self) -> CsrMatrix {
        self.flatten(false)
    }

    /// Flattens to CSR keeping every stored cell, so that converting back
    /// with the same layouts reproduces the block structure exactly.
    pub fn to_csr_structural(&self) -> CsrMatrix {
        self.flatten(true)
    }

    fn flatten(&self, keep_zeros: bool) -> CsrMatrix {
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for bi in 0..self.rows.n_blocks() {
            for li in 0..self.rows.size(bi) {
                for (bj, data) in self.block_row(bi) {
                    let n = self.cols.size(bj);
                    let c0 = self.cols.start(bj);
                    for (lj, &v) in data[li * n..(li + 1) * n].iter().enumerate() {
                        if keep_zeros || v != 0.0 {
                            col_idx.push(c0 + lj);
                            values.push(v);
                        }
                    }
                }
                row_ptr.push(col_idx.len());
            }
        }
        CsrMatrix::try_new(self.n_rows(), self.n_cols(), row_ptr, col_idx, values)
            .expect("block rows produce sorted columns")
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>, SparseError> {
        let mut y = vec![0.0; self.n_rows()];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) -> Result<(), SparseError> {
        if x.len() != self.n_cols() {
            return Err(SparseError::DimensionMismatch {
                expected: self.n_cols(),
                got: x.len(),
            });
        }
        if y.len() != self.n_rows() {
            return Err(SparseError::DimensionMismatch {
                expected: self.n_rows(),
                got: y.len(),
            });
        }
        for bi in 0..self.rows.n_blocks() {
            let yb = &mut y[self.rows.range(bi)];
            yb.iter_mut().for_each(|v| *v = 0.0);
            for (bj, data) in self.block_row(bi) {
                let xb = &x[self.cols.range(bj)];
                let n = xb.len();
                for (li, yv) in yb.iter_mut().enumerate() {
                    let row = &data[li * n..(li + 1) * n];
                    *yv += row.iter().zip(xb).map(|(a, b)| a * b).sum::<f64>();
                }
            }
        }
        Ok(())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Converts a square matrix whose blocks are already contiguous under
/// `partition` (see [`BlockPartition::is_contiguous`]).
pub fn to_vbcsr(a: &CsrMatrix, partition: &BlockPartition) -> Result<VbcsrMatrix, SparseError> {
    if partition.len() != a.n_rows() || !a.is_square() {
        return Err(SparseError::DimensionMismatch {
            expected: a.n_rows(),
            got: partition.len(),
        });
    }
    if !partition.is_contiguous() {
        return Err(SparseError::InvalidPartition(
            "blocks must be contiguous; permute the matrix first".into(),
        ));
    }
    let layout = partition.layout();
    VbcsrMatrix::from_csr(a, &layout, &layout)
}
