//! Per-level transforms applied before each partial factorization:
//! two-sided diagonal scaling and the block independent set ordering that
//! exposes a block-diagonal leading block.

use thiserror::Error;

use crate::compression::QuotientGraph;
use crate::sparse::{CsrMatrix, Permutation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrderingError {
    #[error("cannot scale: row {0} has no nonzero entry")]
    ZeroRow(usize),
    #[error("cannot scale: column {0} has no nonzero entry")]
    ZeroColumn(usize),
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
}

/// Diagonal row and column scaling factors, `S1 A S2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingPair {
    pub row_scale: Vec<f64>,
    pub col_scale: Vec<f64>,
}

impl ScalingPair {
    pub fn identity(n: usize) -> Self {
        Self {
            row_scale: vec![1.0; n],
            col_scale: vec![1.0; n],
        }
    }
}

/// Scales rows by the reciprocal of their largest magnitude, then columns
/// of the row-scaled matrix likewise.
pub fn scale(a: &CsrMatrix) -> Result<(ScalingPair, CsrMatrix), OrderingError> {
    let mut out = a.clone();
    let pair = scale_in_place(&mut out)?;
    Ok((pair, out))
}

pub(crate) fn scale_in_place(a: &mut CsrMatrix) -> Result<ScalingPair, OrderingError> {
    let (n_rows, n_cols) = (a.n_rows(), a.n_cols());
    let mut row_scale = vec![0.0; n_rows];
    for (i, s) in row_scale.iter_mut().enumerate() {
        let m = a.row(i).1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if m == 0.0 || !m.is_finite() {
            return Err(OrderingError::ZeroRow(i));
        }
        *s = 1.0 / m;
    }
    let row_ptr = a.row_ptr().to_vec();
    {
        let vals = a.values_mut();
        for i in 0..n_rows {
            for v in &mut vals[row_ptr[i]..row_ptr[i + 1]] {
                *v *= row_scale[i];
            }
        }
    }
    let mut col_max = vec![0.0f64; n_cols];
    for (&c, &v) in a.col_idx().iter().zip(a.values()) {
        col_max[c] = col_max[c].max(v.abs());
    }
    let mut col_scale = vec![0.0; n_cols];
    for j in 0..n_cols {
        if col_max[j] == 0.0 {
            return Err(OrderingError::ZeroColumn(j));
        }
        col_scale[j] = 1.0 / col_max[j];
    }
    let cols = a.col_idx().to_vec();
    for (v, &c) in a.values_mut().iter_mut().zip(&cols) {
        // clamp the rounding of v * (1/max) so that the column maximum is
        // exactly representable as <= 1
        *v = (*v * col_scale[c]).clamp(-1.0, 1.0);
    }
    Ok(ScalingPair {
        row_scale,
        col_scale,
    })
}

/// Independent set ordering of a quotient graph.
#[derive(Debug, Clone, PartialEq)]
pub struct IndependentSetOrdering {
    /// Permutation over supernodes: independent set first, interface last.
    pub perm: Permutation,
    /// Supernodes in the independent set.
    pub m_blocks: usize,
    /// Scalar rows covered by the independent set.
    pub m_rows: usize,
    /// Offsets (in permuted supernode order) of the diagonal groups; one
    /// group per independent supernode.
    pub group_boundaries: Vec<usize>,
}

/// Greedy block independent set: supernodes are visited by ascending
/// quotient degree (ties by id); an unmarked supernode joins the set and
/// marks its neighbors. Set members come first in ascending id, then the
/// interface in ascending id.
pub fn block_independent_set(qg: &QuotientGraph) -> IndependentSetOrdering {
    block_independent_set_excluding(qg, &vec![false; qg.n_supernodes()])
}

/// As [`block_independent_set`], but `excluded` supernodes are never
/// selected; they stay in the interface part.
pub fn block_independent_set_excluding(
    qg: &QuotientGraph,
    excluded: &[bool],
) -> IndependentSetOrdering {
    let n = qg.n_supernodes();
    assert_eq!(excluded.len(), n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&s| (qg.degree(s), s));
    let mut marked = excluded.to_vec();
    let mut selected = vec![false; n];
    for &s in &order {
        if marked[s] {
            continue;
        }
        selected[s] = true;
        for &t in qg.neighbors(s) {
            marked[t] = true;
        }
    }
    let mut new_order: Vec<usize> = (0..n).filter(|&s| selected[s]).collect();
    let m_blocks = new_order.len();
    let m_rows = new_order.iter().map(|&s| qg.weight(s)).sum();
    new_order.extend((0..n).filter(|&s| !selected[s]));
    IndependentSetOrdering {
        perm: Permutation::try_from_inverse(new_order).expect("selection covers all supernodes"),
        m_blocks,
        m_rows,
        group_boundaries: (0..=m_blocks).collect(),
    }
}
