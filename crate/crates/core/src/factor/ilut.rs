//! Block IKJ elimination with threshold dropping.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::dense::{frobenius, gemm_sub, gemv_sub, DenseLu};
use crate::sparse::{BlockLayout, BlockRow, VbcsrMatrix};

use super::FactorError;

/// Factors of the leading `m_blocks` block rows of a square block matrix
/// `[D F; E C]`, plus the eliminated coupling rows:
///
/// * `lower`: strictly lower blocks of the unit-lower `L` of `D`;
/// * `upper`: blocks right of the pivot in rows of `D`, i.e. the strict
///   upper part of `U` (columns `< m_blocks`) and `G = L^{-1} F` (columns
///   `>= m_blocks`);
/// * `pivots`: the diagonal blocks of `U`, factored;
/// * `coupling`: `W = E U^{-1}`, one block row per row of `C`.
#[derive(Debug, Clone)]
pub struct BlockFactors {
    layout: BlockLayout,
    m_blocks: usize,
    lower: Vec<BlockRow>,
    upper: Vec<BlockRow>,
    pivots: Vec<DenseLu>,
    coupling: Vec<BlockRow>,
}

fn dropped(block: &[f64], rows: usize, cols: usize, t: f64) -> bool {
    frobenius(block) / ((rows * cols) as f64) < t
}

fn keep_largest(row: &mut BlockRow, cap: usize) {
    if row.len() > cap {
        row.sort_by(|a, b| {
            frobenius(&b.1)
                .total_cmp(&frobenius(&a.1))
                .then(a.0.cmp(&b.0))
        });
        row.truncate(cap);
        row.sort_unstable_by_key(|b| b.0);
    }
}

/// Sparse accumulator for one block row.
struct Workspace {
    slot: Vec<usize>,
    blocks: Vec<(usize, Vec<f64>)>,
    pending: BinaryHeap<Reverse<usize>>,
}

impl Workspace {
    fn new(n_blocks: usize) -> Self {
        Self {
            slot: vec![usize::MAX; n_blocks],
            blocks: Vec::new(),
            pending: BinaryHeap::new(),
        }
    }

    fn entry(&mut self, j: usize, len: usize, limit: usize) -> &mut Vec<f64> {
        if self.slot[j] == usize::MAX {
            self.slot[j] = self.blocks.len();
            self.blocks.push((j, vec![0.0; len]));
            if j < limit {
                self.pending.push(Reverse(j));
            }
        }
        &mut self.blocks[self.slot[j]].1
    }

    fn take(&mut self, j: usize) -> Vec<f64> {
        std::mem::take(&mut self.blocks[self.slot[j]].1)
    }

    /// Remaining blocks sorted by column; resets the workspace.
    fn drain(&mut self) -> BlockRow {
        let mut out: BlockRow = Vec::with_capacity(self.blocks.len());
        for (j, data) in self.blocks.drain(..) {
            self.slot[j] = usize::MAX;
            if !data.is_empty() {
                out.push((j, data));
            }
        }
        out.sort_unstable_by_key(|b| b.0);
        out
    }

    /// Eliminates block columns `< limit` of one block row of height `m`.
    /// Returns the kept multipliers and the remaining blocks.
    #[allow(clippy::too_many_arguments)]
    fn eliminate<'a>(
        &mut self,
        row: impl Iterator<Item = (usize, &'a [f64])>,
        m: usize,
        layout: &BlockLayout,
        limit: usize,
        upper: &[BlockRow],
        pivots: &[DenseLu],
        t: f64,
    ) -> (BlockRow, BlockRow) {
        for (j, data) in row {
            self.entry(j, data.len(), limit).copy_from_slice(data);
        }
        let mut lower = BlockRow::new();
        while let Some(Reverse(k)) = self.pending.pop() {
            let mut l = self.take(k);
            let sk = layout.size(k);
            pivots[k].solve_right_panel(&mut l, m);
            if dropped(&l, m, sk, t) {
                continue;
            }
            for (j, u) in &upper[k] {
                let sj = layout.size(*j);
                gemm_sub(self.entry(*j, m * sj, limit), &l, u, m, sk, sj);
            }
            lower.push((k, l));
        }
        (lower, self.drain())
    }
}

/// Partial block factorization of `a` (square, identical row and column
/// layouts) eliminating the first `m_blocks` block rows. Returns the
/// factors and the block rows of the Schur complement (columns shifted by
/// `m_blocks`), which are assembled without dropping.
///
/// Multipliers are dropped as soon as they are computed if small; the
/// blocks of `U` and `G` are dropped once their row is complete. Pivot
/// blocks are never dropped. `fill_cap` optionally keeps only the largest
/// off-diagonal blocks per row of `L` and `U`.
pub(crate) fn partial_factor(
    a: &VbcsrMatrix,
    m_blocks: usize,
    t: f64,
    fill_cap: Option<usize>,
    level: usize,
) -> Result<(BlockFactors, Vec<BlockRow>), FactorError> {
    let layout = a.row_layout().clone();
    assert_eq!(
        &layout,
        a.col_layout(),
        "partial_factor needs a square block layout"
    );
    let nb = layout.n_blocks();
    assert!(m_blocks <= nb);
    let mut ws = Workspace::new(nb);
    let mut lower = Vec::with_capacity(m_blocks);
    let mut upper: Vec<BlockRow> = Vec::with_capacity(m_blocks);
    let mut pivots = Vec::with_capacity(m_blocks);
    for i in 0..m_blocks {
        let m = layout.size(i);
        let (mut low, rest) = ws.eliminate(a.block_row(i), m, &layout, i, &upper, &pivots, t);
        let mut diag = None;
        let mut up = BlockRow::new();
        for (j, data) in rest {
            if j == i {
                diag = Some(data);
            } else if !dropped(&data, m, layout.size(j), t) {
                up.push((j, data));
            }
        }
        let diag = diag.ok_or(FactorError::MissingDiagonal {
            level,
            block_row: i,
        })?;
        if let Some(cap) = fill_cap {
            keep_largest(&mut low, cap);
            keep_largest(&mut up, cap);
        }
        let lu = DenseLu::factor(m, diag).map_err(|e| FactorError::SingularPivot {
            level,
            block_row: i,
            magnitude: e.magnitude,
        })?;
        lower.push(low);
        upper.push(up);
        pivots.push(lu);
    }
    let mut coupling = Vec::with_capacity(nb - m_blocks);
    let mut schur = Vec::with_capacity(nb - m_blocks);
    for i in m_blocks..nb {
        let m = layout.size(i);
        let (w, rest) = ws.eliminate(a.block_row(i), m, &layout, m_blocks, &upper, &pivots, t);
        coupling.push(w);
        schur.push(rest.into_iter().map(|(j, d)| (j - m_blocks, d)).collect());
    }
    Ok((
        BlockFactors {
            layout,
            m_blocks,
            lower,
            upper,
            pivots,
            coupling,
        },
        schur,
    ))
}

impl BlockFactors {
    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    /// Number of eliminated block rows.
    pub fn m_blocks(&self) -> usize {
        self.m_blocks
    }

    /// Number of eliminated scalar rows.
    pub fn m_rows(&self) -> usize {
        self.layout.start(self.m_blocks)
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn lower_rows(&self) -> &[BlockRow] {
        &self.lower
    }

    pub fn upper_rows(&self) -> &[BlockRow] {
        &self.upper
    }

    pub fn coupling_rows(&self) -> &[BlockRow] {
        &self.coupling
    }

    pub fn pivots(&self) -> &[DenseLu] {
        &self.pivots
    }

    /// Stored scalars over `L`, `U` (pivots included), `G` and `W`.
    pub fn nnz(&self) -> usize {
        let cells = |rows: &[BlockRow]| -> usize {
            rows.iter().flat_map(|r| r.iter().map(|b| b.1.len())).sum()
        };
        cells(&self.lower)
            + cells(&self.upper)
            + cells(&self.coupling)
            + self.pivots.iter().map(DenseLu::nnz).sum::<usize>()
    }

    /// `v[..m] <- L^{-1} v[..m]`, then `v[m..] -= W v[..m]`.
    pub fn forward(&self, v: &mut [f64]) {
        debug_assert_eq!(v.len(), self.dim());
        let rows = self.lower.iter().chain(&self.coupling);
        for (i, row) in rows.enumerate() {
            let r = self.layout.range(i);
            let (head, tail) = v.split_at_mut(r.start);
            let target = &mut tail[..r.len()];
            for (k, l) in row {
                gemv_sub(target, l, &head[self.layout.range(*k)]);
            }
        }
    }

    /// Back substitution over the eliminated rows, reading the already
    /// solved trailing part `v[m..]`: `v_I <- U_II^{-1} (v_I - sum U_IJ v_J)`.
    pub fn backward(&self, v: &mut [f64]) {
        debug_assert_eq!(v.len(), self.dim());
        for i in (0..self.m_blocks).rev() {
            let r = self.layout.range(i);
            let (head, tail) = v.split_at_mut(r.end);
            let target = &mut head[r.start..];
            for (j, u) in &self.upper[i] {
                let rj = self.layout.range(*j);
                gemv_sub(target, u, &tail[rj.start - r.end..rj.end - r.end]);
            }
            self.pivots[i].solve_in_place(target);
        }
    }

    /// Dense `L` (unit diagonal, `W` below) and `U` (`G` on the right, zero
    /// trailing block), so that `A = L U + [0 0; 0 S]` when nothing was
    /// dropped. Meant for small test oracles.
    pub fn dense_factors(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.dim();
        let mut l = vec![0.0; n * n];
        let mut u = vec![0.0; n * n];
        for i in 0..n {
            l[i * n + i] = 1.0;
        }
        let put = |dst: &mut Vec<f64>, bi: usize, bj: usize, data: &[f64]| {
            let (ri, rj) = (self.layout.range(bi), self.layout.range(bj));
            let w = rj.len();
            for (a, row) in ri.enumerate() {
                for (b, col) in rj.clone().enumerate() {
                    dst[row * n + col] = data[a * w + b];
                }
            }
        };
        for (i, row) in self.lower.iter().chain(&self.coupling).enumerate() {
            for (k, data) in row {
                put(&mut l, i, *k, data);
            }
        }
        for (i, row) in self.upper.iter().enumerate() {
            put(&mut u, i, i, &self.pivots[i].reconstruct());
            for (j, data) in row {
                put(&mut u, i, *j, data);
            }
        }
        (l, u)
    }
}

/// Block ILUT of the whole matrix: `M ~ L U`.
pub fn block_ilut(m: &VbcsrMatrix, t: f64) -> Result<BlockFactors, FactorError> {
    block_ilut_capped(m, t, None)
}

pub(crate) fn block_ilut_capped(
    m: &VbcsrMatrix,
    t: f64,
    fill_cap: Option<usize>,
) -> Result<BlockFactors, FactorError> {
    if !(t >= 0.0) {
        return Err(FactorError::InvalidParams(format!(
            "drop tolerance {t} must be >= 0"
        )));
    }
    Ok(partial_factor(m, m.n_block_rows(), t, fill_cap, 0)?.0)
}

/// One level of the partial factorization on an already permuted and
/// scaled matrix whose first `m_blocks` block rows form `D`. Returns the
/// factors and the Schur complement `C - E D^{-1} F` (approximate when
/// dropping is active) on the trailing layout.
pub fn factorize_level(
    a: &VbcsrMatrix,
    m_blocks: usize,
    t: f64,
) -> Result<(BlockFactors, VbcsrMatrix), FactorError> {
    factorize_level_at(a, m_blocks, t, 0)
}

pub(crate) fn factorize_level_at(
    a: &VbcsrMatrix,
    m_blocks: usize,
    t: f64,
    level: usize,
) -> Result<(BlockFactors, VbcsrMatrix), FactorError> {
    if !(t >= 0.0) {
        return Err(FactorError::InvalidParams(format!(
            "drop tolerance {t} must be >= 0"
        )));
    }
    let (factors, schur_rows) = partial_factor(a, m_blocks, t, None, level)?;
    let tail = factors.layout.tail(m_blocks);
    let schur = VbcsrMatrix::from_block_rows(tail.clone(), tail, schur_rows)?;
    Ok((factors, schur))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::CsrMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
        let mut c = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let aik = a[i * n + k];
                for j in 0..n {
                    c[i * n + j] += aik * b[k * n + j];
                }
            }
        }
        c
    }

    fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
        let d: f64 = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        d / frobenius(b).max(f64::MIN_POSITIVE)
    }

    #[test]
    fn block_diagonal_gives_identity_lower() {
        let a = CsrMatrix::from_dense(
            4,
            4,
            &[
                2.0, 1.0, 0.0, 0.0, //
                1.0, 3.0, 0.0, 0.0, //
                0.0, 0.0, 4.0, 0.0, //
                0.0, 0.0, 0.0, 5.0,
            ],
        );
        let layout = BlockLayout::from_sizes([2, 1, 1]);
        let vb = VbcsrMatrix::from_csr(&a, &layout, &layout).unwrap();
        for t in [0.0, 0.5, f64::INFINITY] {
            let f = block_ilut(&vb, t).unwrap();
            assert!(f.lower_rows().iter().all(|r| r.is_empty()));
            assert!(f.upper_rows().iter().all(|r| r.is_empty()));
            let (l, u) = f.dense_factors();
            assert_eq!(matmul(&l, &u, 4), a.to_dense());
        }
    }

    #[test]
    fn zero_drop_reproduces_dense_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 5;
        let mut d: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for i in 0..n {
            d[i * n + i] += 4.0;
        }
        let a = CsrMatrix::from_dense(n, n, &d);
        let layout = BlockLayout::from_sizes([2, 3]);
        let vb = VbcsrMatrix::from_csr(&a, &layout, &layout).unwrap();
        let f = block_ilut(&vb, 0.0).unwrap();
        let (l, u) = f.dense_factors();
        assert!(rel_diff(&matmul(&l, &u, n), &d) <= 1e-13);
    }

    #[test]
    fn infinite_threshold_keeps_only_pivots() {
        let a = CsrMatrix::from_dense(3, 3, &[4.0, 1.0, 0.0, 1.0, 4.0, 1.0, 0.0, 1.0, 4.0]);
        let layout = BlockLayout::uniform(3, 1);
        let vb = VbcsrMatrix::from_csr(&a, &layout, &layout).unwrap();
        let f = block_ilut(&vb, f64::INFINITY).unwrap();
        assert!(f.lower_rows().iter().all(|r| r.is_empty()));
        assert!(f.upper_rows().iter().all(|r| r.is_empty()));
        let (_, u) = f.dense_factors();
        assert_eq!(u, vec![4.0, 0.0, 0.0, 0.0, 4.0, 0.0, 0.0, 0.0, 4.0]);
    }

    #[test]
    fn missing_and_singular_pivots_are_reported() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let layout = BlockLayout::uniform(2, 1);
        let vb = VbcsrMatrix::from_csr(&a, &layout, &layout).unwrap();
        assert!(matches!(
            block_ilut(&vb, 0.0),
            Err(FactorError::MissingDiagonal { block_row: 0, .. })
        ));

        let a = CsrMatrix::from_dense(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let layout = BlockLayout::uniform(2, 2);
        let vb = VbcsrMatrix::from_csr(&a, &layout, &layout).unwrap();
        assert!(matches!(
            block_ilut(&vb, 0.0),
            Err(FactorError::SingularPivot { block_row: 0, .. })
        ));
    }

    #[test]
    fn schur_of_small_example() {
        // D = diag(2, 2), F = [1; 0], E = [0 1], C = [3]
        let a = CsrMatrix::from_triplets(
            3,
            3,
            &[
                (0, 0, 2.0),
                (0, 2, 1.0),
                (1, 1, 2.0),
                (2, 1, 0.0),
                (2, 2, 3.0),
            ],
        )
        .unwrap();
        let layout = BlockLayout::uniform(3, 1);
        let vb = VbcsrMatrix::from_csr(&a, &layout, &layout).unwrap();
        let (_, s) = factorize_level(&vb, 2, 0.0).unwrap();
        assert_eq!(s.n_rows(), 1);
        assert_eq!(s.to_csr().to_dense(), vec![3.0]);
    }

    #[test]
    fn block_diagonal_level_is_exact_and_empty() {
        let a = CsrMatrix::from_dense(2, 2, &[3.0, 0.0, 0.0, 7.0]);
        let layout = BlockLayout::uniform(2, 1);
        let vb = VbcsrMatrix::from_csr(&a, &layout, &layout).unwrap();
        let (f, s) = factorize_level(&vb, 2, 0.0).unwrap();
        assert_eq!(s.n_rows(), 0);
        let mut v = vec![3.0, 14.0];
        f.forward(&mut v);
        f.backward(&mut v);
        assert_eq!(v, vec![1.0, 2.0]);
    }

    #[test]
    fn forward_backward_solves_with_exact_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 7;
        let mut d: Vec<f64> = (0..n * n)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    rng.gen_range(-1.0..1.0)
                } else {
                    0.0
                }
            })
            .collect();
        for i in 0..n {
            d[i * n + i] = 5.0;
        }
        let a = CsrMatrix::from_dense(n, n, &d);
        let layout = BlockLayout::from_sizes([2, 1, 3, 1]);
        let vb = VbcsrMatrix::from_csr(&a, &layout, &layout).unwrap();
        let f = block_ilut(&vb, 0.0).unwrap();
        let x: Vec<f64> = (0..n).map(|i| i as f64 - 2.0).collect();
        let mut v = a.spmv(&x).unwrap();
        f.forward(&mut v);
        f.backward(&mut v);
        for (a, b) in v.iter().zip(&x) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}
