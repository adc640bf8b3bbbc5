use crate::compression::{compress, QuotientGraph};
use crate::dense::DenseLu;
use crate::ordering::{block_independent_set_excluding, scale_in_place, ScalingPair};
use crate::sparse::{
    BlockLayout, BlockPartition, CsrMatrix, Permutation, SparseError, VbcsrMatrix,
};

use super::ilut::{factorize_level_at, partial_factor, BlockFactors};
use super::{FactorError, FactorParams, EXACT_LAST_LEVEL_MAX};

/// One level of the multilevel factorization. The level's input matrix is
/// scaled (`S1 A S2`), permuted by `perm` so that the independent blocks
/// come first, and partially factored.
#[derive(Debug, Clone)]
pub struct LevelFactor {
    pub level: usize,
    pub perm: Permutation,
    pub scaling: ScalingPair,
    pub factors: BlockFactors,
}

impl LevelFactor {
    /// Rows at this level.
    pub fn n(&self) -> usize {
        self.factors.dim()
    }

    /// Rows eliminated at this level.
    pub fn m(&self) -> usize {
        self.factors.m_rows()
    }
}

/// Factorization of the last reduced system (after its own scaling).
#[derive(Debug, Clone)]
pub enum LastLevel {
    Empty,
    Ilu {
        scaling: ScalingPair,
        factors: BlockFactors,
    },
    Dense {
        scaling: ScalingPair,
        lu: DenseLu,
    },
}

impl LastLevel {
    pub fn dim(&self) -> usize {
        match self {
            LastLevel::Empty => 0,
            LastLevel::Ilu { factors, .. } => factors.dim(),
            LastLevel::Dense { lu, .. } => lu.dim(),
        }
    }

    pub fn scaling(&self) -> Option<&ScalingPair> {
        match self {
            LastLevel::Empty => None,
            LastLevel::Ilu { scaling, .. } | LastLevel::Dense { scaling, .. } => Some(scaling),
        }
    }

    pub fn nnz(&self) -> usize {
        match self {
            LastLevel::Empty => 0,
            LastLevel::Ilu { factors, .. } => factors.nnz(),
            LastLevel::Dense { lu, .. } => lu.nnz(),
        }
    }
}

/// Relation between the unknowns of the last reduced system and those of
/// the input matrix: last-level position `k` is input row `origin[k]`,
/// and the last (scaled) matrix is `diag(row_scale) S diag(col_scale)`
/// where `S` is the Schur complement in input coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LastLevelMap {
    pub origin: Vec<usize>,
    pub row_scale: Vec<f64>,
    pub col_scale: Vec<f64>,
}

/// Intermediate vectors kept between [`VbarmsPreconditioner::forward`] and
/// [`VbarmsPreconditioner::backward`].
#[derive(Debug, Clone)]
pub struct ForwardState {
    levels: Vec<Vec<f64>>,
    /// Right-hand side of the last (scaled) reduced system.
    pub tail: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct VbarmsPreconditioner {
    n: usize,
    partition: BlockPartition,
    global_perm: Permutation,
    levels: Vec<LevelFactor>,
    last: LastLevel,
    last_map: LastLevelMap,
    last_matrix: Option<CsrMatrix>,
    nnz: usize,
}

#[derive(Clone, Copy)]
enum Mode<'a> {
    Standard,
    Protected(&'a [bool]),
    SingleLevel,
}

/// Compresses `a` and builds the multilevel preconditioner.
pub fn vbarms_factorize(
    a: &CsrMatrix,
    params: &FactorParams,
) -> Result<VbarmsPreconditioner, FactorError> {
    VbarmsPreconditioner::new(a, params)
}

pub fn vbarms_solve(p: &VbarmsPreconditioner, b: &[f64]) -> Result<Vec<f64>, SparseError> {
    p.solve(b)
}

impl VbarmsPreconditioner {
    pub fn new(a: &CsrMatrix, params: &FactorParams) -> Result<Self, FactorError> {
        params.validate()?;
        if !a.is_square() {
            return Err(FactorError::NotSquare {
                rows: a.n_rows(),
                cols: a.n_cols(),
            });
        }
        let partition = compress(a, &params.compression)?;
        Self::build(a, partition, params, Mode::Standard)
    }

    /// Uses a precomputed block partition instead of compressing `a`.
    pub fn with_partition(
        a: &CsrMatrix,
        partition: &BlockPartition,
        params: &FactorParams,
    ) -> Result<Self, FactorError> {
        Self::build(a, partition.clone(), params, Mode::Standard)
    }

    /// Block ILUT of the whole (scaled) matrix, no independent set levels.
    pub fn block_ilu(
        a: &CsrMatrix,
        partition: &BlockPartition,
        params: &FactorParams,
    ) -> Result<Self, FactorError> {
        Self::build(a, partition.clone(), params, Mode::SingleLevel)
    }

    /// Multilevel factorization in which the rows flagged in `protected`
    /// are never eliminated: they make up the whole last reduced system,
    /// whose scaled matrix is kept (see [`Self::last_matrix`]). When
    /// unprotected rows remain at the last allowed level they are all
    /// eliminated there. A block is protected if any of its rows is.
    pub fn protected(
        a: &CsrMatrix,
        partition: &BlockPartition,
        protected: &[bool],
        params: &FactorParams,
    ) -> Result<Self, FactorError> {
        if protected.len() != a.n_rows() {
            return Err(SparseError::DimensionMismatch {
                expected: a.n_rows(),
                got: protected.len(),
            }
            .into());
        }
        Self::build(a, partition.clone(), params, Mode::Protected(protected))
    }

    fn build(
        a: &CsrMatrix,
        partition: BlockPartition,
        params: &FactorParams,
        mode: Mode<'_>,
    ) -> Result<Self, FactorError> {
        params.validate()?;
        if !a.is_square() {
            return Err(FactorError::NotSquare {
                rows: a.n_rows(),
                cols: a.n_cols(),
            });
        }
        let n = a.n_rows();
        if partition.len() != n {
            return Err(SparseError::DimensionMismatch {
                expected: n,
                got: partition.len(),
            }
            .into());
        }
        let t = params.drop_tol;
        let global_perm = partition.permutation();
        let mut cur = a.permute(&global_perm, &global_perm)?;
        let mut layout = partition.layout();
        let mut origin = global_perm.inverse().to_vec();
        let mut cum_r = vec![1.0; n];
        let mut cum_c = vec![1.0; n];
        let mut protected_blocks: Vec<bool> = match mode {
            Mode::Protected(flags) => (0..layout.n_blocks())
                .map(|b| layout.range(b).any(|k| flags[origin[k]]))
                .collect(),
            _ => vec![false; layout.n_blocks()],
        };

        let mut levels: Vec<LevelFactor> = Vec::new();
        let mut pending: Option<ScalingPair> = None;
        loop {
            let n_l = layout.dim();
            let lvl = levels.len();
            if n_l == 0 {
                break;
            }
            let forced = match mode {
                Mode::SingleLevel => break,
                Mode::Standard => {
                    if lvl >= params.max_levels || (lvl > 0 && n_l <= params.min_schur_size) {
                        break;
                    }
                    false
                }
                Mode::Protected(_) => {
                    if protected_blocks.iter().all(|&p| p) {
                        break;
                    }
                    lvl + 1 >= params.max_levels
                }
            };
            let scaling = scale_in_place(&mut cur)
                .map_err(|source| FactorError::Scaling { level: lvl, source })?;
            accumulate(&mut cum_r, &scaling.row_scale);
            accumulate(&mut cum_c, &scaling.col_scale);

            let nb = layout.n_blocks();
            let (block_order, m_blocks) = if forced {
                let mut order: Vec<usize> = (0..nb).filter(|&b| !protected_blocks[b]).collect();
                let m = order.len();
                order.extend((0..nb).filter(|&b| protected_blocks[b]));
                (order, m)
            } else {
                let vb = VbcsrMatrix::from_csr(&cur, &layout, &layout)?;
                let qg = QuotientGraph::from_block_pattern(&vb);
                let o = block_independent_set_excluding(&qg, &protected_blocks);
                (o.perm.inverse().to_vec(), o.m_blocks)
            };
            if m_blocks == 0 {
                pending = Some(scaling);
                break;
            }
            let (perm, new_layout) = scalar_permutation(&layout, &block_order);
            let permuted = cur.permute(&perm, &perm)?;
            let vb = VbcsrMatrix::from_csr(&permuted, &new_layout, &new_layout)?;
            let (factors, schur) = factorize_level_at(&vb, m_blocks, t, lvl)?;
            let m = factors.m_rows();
            origin = perm.apply(&origin).split_off(m);
            cum_r = perm.apply(&cum_r).split_off(m);
            cum_c = perm.apply(&cum_c).split_off(m);
            protected_blocks = block_order[m_blocks..]
                .iter()
                .map(|&b| protected_blocks[b])
                .collect();
            cur = schur.to_csr_structural();
            layout = new_layout.tail(m_blocks);
            levels.push(LevelFactor {
                level: lvl,
                perm,
                scaling,
                factors,
            });
        }

        let level = levels.len();
        let dim = layout.dim();
        let last = if dim == 0 {
            LastLevel::Empty
        } else {
            let scaling = match pending {
                Some(s) => s,
                None => {
                    let s = scale_in_place(&mut cur)
                        .map_err(|source| FactorError::Scaling { level, source })?;
                    accumulate(&mut cum_r, &s.row_scale);
                    accumulate(&mut cum_c, &s.col_scale);
                    s
                }
            };
            if params.exact_last_level && dim <= EXACT_LAST_LEVEL_MAX {
                let lu = DenseLu::factor(dim, cur.to_dense()).map_err(|e| {
                    FactorError::SingularPivot {
                        level,
                        block_row: 0,
                        magnitude: e.magnitude,
                    }
                })?;
                LastLevel::Dense { scaling, lu }
            } else {
                let vb = VbcsrMatrix::from_csr(&cur, &layout, &layout)?;
                let nb = layout.n_blocks();
                let (factors, _) = partial_factor(&vb, nb, t, params.last_level_fill, level)?;
                LastLevel::Ilu { scaling, factors }
            }
        };
        let last_matrix = match mode {
            Mode::Protected(_) => Some(cur),
            _ => None,
        };
        let nnz = levels.iter().map(|l| l.factors.nnz()).sum::<usize>() + last.nnz();
        Ok(Self {
            n,
            partition,
            global_perm,
            levels,
            last,
            last_map: LastLevelMap {
                origin,
                row_scale: cum_r,
                col_scale: cum_c,
            },
            last_matrix,
            nnz,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Block partition used for the global block permutation.
    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    pub fn levels(&self) -> &[LevelFactor] {
        &self.levels
    }

    pub fn last(&self) -> &LastLevel {
        &self.last
    }

    pub fn last_map(&self) -> &LastLevelMap {
        &self.last_map
    }

    /// The scaled last reduced matrix; kept only by [`Self::protected`].
    pub fn last_matrix(&self) -> Option<&CsrMatrix> {
        self.last_matrix.as_ref()
    }

    /// Stored scalars over all factors.
    pub fn nnz(&self) -> usize {
        self.nnz
    }

    /// Applies `M^{-1}`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, SparseError> {
        let mut state = self.forward(b)?;
        let mut tail = std::mem::take(&mut state.tail);
        self.solve_last(&mut tail);
        Ok(self.backward(state, &tail))
    }

    /// Forward sweep over all levels: permutations, row scalings, `L^{-1}`
    /// and the `W` updates. The returned `tail` is the right-hand side of
    /// the scaled last reduced system.
    pub fn forward(&self, b: &[f64]) -> Result<ForwardState, SparseError> {
        if b.len() != self.n {
            return Err(SparseError::DimensionMismatch {
                expected: self.n,
                got: b.len(),
            });
        }
        let mut v = self.global_perm.apply(b);
        let mut states = Vec::with_capacity(self.levels.len());
        for lvl in &self.levels {
            accumulate(&mut v, &lvl.scaling.row_scale);
            let mut y = lvl.perm.apply(&v);
            lvl.factors.forward(&mut y);
            v = y[lvl.m()..].to_vec();
            states.push(y);
        }
        if let Some(s) = self.last.scaling() {
            accumulate(&mut v, &s.row_scale);
        }
        Ok(ForwardState {
            levels: states,
            tail: v,
        })
    }

    /// `r <- (L_S U_S)^{-1} r` on the scaled last reduced system.
    pub fn solve_last(&self, r: &mut [f64]) {
        match &self.last {
            LastLevel::Empty => {}
            LastLevel::Ilu { factors, .. } => {
                factors.forward(r);
                factors.backward(r);
            }
            LastLevel::Dense { lu, .. } => lu.solve_in_place(r),
        }
    }

    /// Backward sweep given the solution `z` of the scaled last system.
    pub fn backward(&self, state: ForwardState, z: &[f64]) -> Vec<f64> {
        let mut v = z.to_vec();
        if let Some(s) = self.last.scaling() {
            accumulate(&mut v, &s.col_scale);
        }
        for (lvl, mut y) in self.levels.iter().zip(state.levels).rev() {
            y[lvl.m()..].copy_from_slice(&v);
            lvl.factors.backward(&mut y);
            v = lvl.perm.apply_inverse(&y);
            accumulate(&mut v, &lvl.scaling.col_scale);
        }
        self.global_perm.apply_inverse(&v)
    }
}

fn accumulate(v: &mut [f64], scale: &[f64]) {
    for (x, s) in v.iter_mut().zip(scale) {
        *x *= s;
    }
}

/// Scalar permutation and block layout obtained by visiting the blocks of
/// `layout` in `block_order` (new position -> old block).
fn scalar_permutation(layout: &BlockLayout, block_order: &[usize]) -> (Permutation, BlockLayout) {
    let inverse: Vec<usize> = block_order.iter().flat_map(|&b| layout.range(b)).collect();
    let new_layout = BlockLayout::from_sizes(block_order.iter().map(|&b| layout.size(b)));
    (
        Permutation::try_from_inverse(inverse).expect("block order is a permutation"),
        new_layout,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compression::CompressionMethod;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, density: f64, seed: u64) -> CsrMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0 + rng.gen::<f64>()));
            for j in 0..n {
                if i != j && rng.gen_bool(density) {
                    t.push((i, j, rng.gen_range(-1.0..1.0)));
                }
            }
        }
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    fn residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
        let ax = a.spmv(x).unwrap();
        let r: f64 = ax
            .iter()
            .zip(b)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt();
        r / b.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn exact_params(levels: usize) -> FactorParams {
        FactorParams {
            drop_tol: 0.0,
            max_levels: levels,
            min_schur_size: 0,
            exact_last_level: true,
            ..Default::default()
        }
    }

    #[test]
    fn identity_gives_identity_preconditioner() {
        let a = CsrMatrix::identity(6);
        let p = VbarmsPreconditioner::new(&a, &FactorParams::default()).unwrap();
        assert_eq!(p.levels().len(), 1);
        assert_eq!(p.last().dim(), 0);
        assert_eq!(p.nnz(), 6);
        let b = vec![1.0, -2.0, 3.0, 0.5, 0.0, 7.0];
        assert_eq!(p.solve(&b).unwrap(), b);
    }

    #[test]
    fn zero_drop_is_exact() {
        let a = random_matrix(100, 0.05, 1);
        let b: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        for levels in [1, 2, 4] {
            let p = VbarmsPreconditioner::new(&a, &exact_params(levels)).unwrap();
            let x = p.solve(&b).unwrap();
            assert!(residual(&a, &x, &b) <= 1e-10, "levels {levels}");
            let q = VbarmsPreconditioner::new(
                &a,
                &FactorParams {
                    exact_last_level: false,
                    ..exact_params(levels)
                },
            )
            .unwrap();
            let x = q.solve(&b).unwrap();
            assert!(residual(&a, &x, &b) <= 1e-10, "ilu last, levels {levels}");
        }
    }

    #[test]
    fn block_ilu_mode_has_no_levels() {
        let a = random_matrix(40, 0.1, 2);
        let part = BlockPartition::singletons(40);
        let p = VbarmsPreconditioner::block_ilu(
            &a,
            &part,
            &FactorParams {
                drop_tol: 0.0,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(p.levels().is_empty());
        let b = vec![1.0; 40];
        assert!(residual(&a, &p.solve(&b).unwrap(), &b) <= 1e-10);
    }

    #[test]
    fn solve_is_linear() {
        let a = random_matrix(60, 0.08, 3);
        let params = FactorParams {
            drop_tol: 1e-3,
            compression: crate::compression::CompressionParams {
                method: CompressionMethod::Angle,
                ..Default::default()
            },
            ..Default::default()
        };
        let p = VbarmsPreconditioner::new(&a, &params).unwrap();
        let b1: Vec<f64> = (0..60).map(|i| (i as f64 * 0.3).cos()).collect();
        let b2: Vec<f64> = (0..60).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let (al, be) = (2.5, -0.75);
        let comb: Vec<f64> = b1.iter().zip(&b2).map(|(x, y)| al * x + be * y).collect();
        let x = p.solve(&comb).unwrap();
        let x1 = p.solve(&b1).unwrap();
        let x2 = p.solve(&b2).unwrap();
        for i in 0..60 {
            let want = al * x1[i] + be * x2[i];
            assert!((x[i] - want).abs() <= 1e-12 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn protected_rows_end_in_the_last_system() {
        let a = random_matrix(30, 0.1, 4);
        let part = BlockPartition::singletons(30);
        let flags: Vec<bool> = (0..30).map(|i| i % 5 == 0).collect();
        for levels in [1, 2, 4] {
            let p =
                VbarmsPreconditioner::protected(&a, &part, &flags, &exact_params(levels)).unwrap();
            let mut origin = p.last_map().origin.clone();
            origin.sort_unstable();
            assert_eq!(origin, vec![0, 5, 10, 15, 20, 25]);
            assert!(p.last_matrix().is_some());
            let b = vec![1.0; 30];
            assert!(residual(&a, &p.solve(&b).unwrap(), &b) <= 1e-10);
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let p =
            VbarmsPreconditioner::new(&CsrMatrix::identity(3), &FactorParams::default()).unwrap();
        assert!(p.solve(&[1.0, 2.0]).is_err());
        let rect = CsrMatrix::from_triplets(2, 3, &[(0, 0, 1.0)]).unwrap();
        assert!(matches!(
            VbarmsPreconditioner::new(&rect, &FactorParams::default()),
            Err(FactorError::NotSquare { rows: 2, cols: 3 })
        ));
    }
}
