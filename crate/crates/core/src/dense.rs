//! Small dense kernels used on the blocks of a variable-block matrix.
//!
//! All matrices are row-major slices.

/// Relative pivot threshold: a pivot smaller than this times the largest
/// entry of the block is treated as singular.
pub const PIVOT_THRESHOLD: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularBlock {
    /// Magnitude of the rejected pivot.
    pub magnitude: f64,
}

/// LU factorization with partial (row) pivoting of a square block:
/// `P B = L U` with unit-lower `L`, stored in place.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    /// Row `i` of `P B` is row `perm[i]` of `B`.
    perm: Vec<usize>,
}

impl DenseLu {
    pub fn factor(n: usize, mut a: Vec<f64>) -> Result<DenseLu, SingularBlock> {
        assert_eq!(a.len(), n * n);
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tiny = PIVOT_THRESHOLD * scale;
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmag) = (k..n)
                .map(|i| (i, a[i * n + k].abs()))
                .fold(
                    (k, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
            if !(pmag >= tiny) || pmag == 0.0 {
                return Err(SingularBlock {
                    magnitude: pmag.max(0.0),
                });
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = a[k * n + k];
            for i in k + 1..n {
                let l = a[i * n + k] / pivot;
                a[i * n + k] = l;
                if l != 0.0 {
                    for j in k + 1..n {
                        a[i * n + j] -= l * a[k * n + j];
                    }
                }
            }
        }
        Ok(DenseLu { n, lu: a, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `x <- B^{-1} x` for a single vector.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(x.len(), n);
        let mut y: Vec<f64> = self.perm.iter().map(|&p| x[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: f64 = row.iter().zip(&y[..i]).map(|(l, v)| l * v).sum();
            y[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s: f64 = row.iter().zip(&y[i + 1..]).map(|(u, v)| u * v).sum();
            y[i] = (y[i] - s) / self.lu[i * n + i];
        }
        x.copy_from_slice(&y);
    }

    /// `X <- B^{-1} X` where `X` is `n x cols`.
    pub fn solve_left_panel(&self, x: &mut [f64], cols: usize) {
        let n = self.n;
        debug_assert_eq!(x.len(), n * cols);
        let mut y = vec![0.0; n * cols];
        for (i, &p) in self.perm.iter().enumerate() {
            y[i * cols..(i + 1) * cols].copy_from_slice(&x[p * cols..(p + 1) * cols]);
        }
        for i in 0..n {
            for k in 0..i {
                let l = self.lu[i * n + k];
                if l != 0.0 {
                    for c in 0..cols {
                        y[i * cols + c] -= l * y[k * cols + c];
                    }
                }
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let u = self.lu[i * n + k];
                if u != 0.0 {
                    for c in 0..cols {
                        y[i * cols + c] -= u * y[k * cols + c];
                    }
                }
            }
            let d = self.lu[i * n + i];
            for c in 0..cols {
                y[i * cols + c] /= d;
            }
        }
        x.copy_from_slice(&y);
    }

    /// `X <- X B^{-1}` where `X` is `rows x n`.
    pub fn solve_right_panel(&self, x: &mut [f64], rows: usize) {
        let n = self.n;
        debug_assert_eq!(x.len(), rows * n);
        // B = P^T L U, so X B^{-1} = ((X U^{-1}) L^{-1}) P
        let mut z = vec![0.0; n];
        for r in 0..rows {
            let xr = &mut x[r * n..(r + 1) * n];
            for j in 0..n {
                let mut s = xr[j];
                for k in 0..j {
                    s -= z[k] * self.lu[k * n + j];
                }
                z[j] = s / self.lu[j * n + j];
            }
            for j in (0..n).rev() {
                let mut s = z[j];
                for k in j + 1..n {
                    s -= z[k] * self.lu[k * n + j];
                }
                z[j] = s;
            }
            for (k, &p) in self.perm.iter().enumerate() {
                xr[p] = z[k];
            }
        }
    }

    /// Rebuilds the original block `B = P^T L U`.
    pub fn reconstruct(&self) -> Vec<f64> {
        let n = self.n;
        let mut b = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..=i.min(j) {
                    let l = if k == i { 1.0 } else { self.lu[i * n + k] };
                    s += l * self.lu[k * n + j];
                }
                b[self.perm[i] * n + j] = s;
            }
        }
        b
    }

    /// Stored scalars (the factored block).
    pub fn nnz(&self) -> usize {
        self.n * self.n
    }
}

/// `C -= A B` with `A: m x k`, `B: k x n`, `C: m x n`.
#[inline]
pub fn gemm_sub(c: &mut [f64], a: &[f64], b: &[f64], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    for i in 0..m {
        let ci = &mut c[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            if aip == 0.0 {
                continue;
            }
            let bp = &b[p * n..(p + 1) * n];
            for (cv, bv) in ci.iter_mut().zip(bp) {
                *cv -= aip * bv;
            }
        }
    }
}

/// `y -= A x` with `A: m x n`.
#[inline]
pub fn gemv_sub(y: &mut [f64], a: &[f64], x: &[f64]) {
    let n = x.len();
    debug_assert_eq!(a.len(), y.len() * n);
    for (i, yv) in y.iter_mut().enumerate() {
        *yv -= a[i * n..(i + 1) * n]
            .iter()
            .zip(x)
            .map(|(a, b)| a * b)
            .sum::<f64>();
    }
}

pub fn frobenius(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}
