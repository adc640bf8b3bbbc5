//! Restarted flexible GMRES with right preconditioning.

use thiserror::Error;

use crate::factor::VbarmsPreconditioner;
use crate::sparse::{CsrMatrix, VbcsrMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KrylovError {
    #[error("non-finite value in the Arnoldi process at iteration {iteration}")]
    Divergence { iteration: usize },
    #[error("operator dimension {got} does not match right-hand side length {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid Krylov parameter: {0}")]
    InvalidParams(String),
    #[error("operator failed: {0}")]
    Operator(String),
}

/// A linear (or, for preconditioners, possibly varying) map `y = Op x`.
pub trait Operator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<(), KrylovError>;
}

impl Operator for CsrMatrix {
    fn dim(&self) -> usize {
        self.n_rows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<(), KrylovError> {
        self.spmv_into(x, y)
            .map_err(|e| KrylovError::Operator(e.to_string()))
    }
}

impl Operator for VbcsrMatrix {
    fn dim(&self) -> usize {
        self.n_rows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<(), KrylovError> {
        self.spmv_into(x, y)
            .map_err(|e| KrylovError::Operator(e.to_string()))
    }
}

impl Operator for VbarmsPreconditioner {
    fn dim(&self) -> usize {
        VbarmsPreconditioner::dim(self)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<(), KrylovError> {
        let z = self
            .solve(x)
            .map_err(|e| KrylovError::Operator(e.to_string()))?;
        y.copy_from_slice(&z);
        Ok(())
    }
}

/// The identity of a given dimension.
#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl Operator for Identity {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<(), KrylovError> {
        y.copy_from_slice(x);
        Ok(())
    }
}

/// Wraps a closure as an [`Operator`].
pub struct FnOperator<F> {
    n: usize,
    f: F,
}

pub fn from_fn<F>(n: usize, f: F) -> FnOperator<F>
where
    F: Fn(&[f64], &mut [f64]) -> Result<(), KrylovError> + Sync,
{
    FnOperator { n, f }
}

impl<F> Operator for FnOperator<F>
where
    F: Fn(&[f64], &mut [f64]) -> Result<(), KrylovError> + Sync,
{
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<(), KrylovError> {
        (self.f)(x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovParams {
    pub tol: f64,
    pub max_iters: usize,
    pub restart: usize,
    /// Record `max |V^T V - I|` per restart cycle.
    pub track_orthogonality: bool,
}

impl Default for KrylovParams {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iters: 1000,
            restart: 60,
            track_orthogonality: false,
        }
    }
}

impl KrylovParams {
    pub fn validate(&self) -> Result<(), KrylovError> {
        if !(self.tol > 0.0) {
            return Err(KrylovError::InvalidParams(format!(
                "tol = {} must be > 0",
                self.tol
            )));
        }
        if self.restart == 0 {
            return Err(KrylovError::InvalidParams("restart must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveStats {
    pub iterations: usize,
    /// True relative residual `||b - A x|| / ||b||` of the returned `x`.
    pub final_relres: f64,
    pub converged: bool,
    /// Relative residuals: the true one at the start of each cycle, then
    /// the Arnoldi estimate after every iteration.
    pub residual_history: Vec<f64>,
    /// Index into `residual_history` where each cycle starts.
    pub cycle_starts: Vec<usize>,
    pub precond_applies: usize,
    /// Worst `max |V^T V - I|` over cycles, when tracked.
    pub orthogonality_loss: Option<f64>,
}

impl SolveStats {
    /// Residual estimates of each restart cycle.
    pub fn cycles(&self) -> impl Iterator<Item = &[f64]> + '_ {
        let ends = self
            .cycle_starts
            .iter()
            .skip(1)
            .copied()
            .chain([self.residual_history.len()]);
        self.cycle_starts
            .iter()
            .zip(ends)
            .map(|(&s, e)| &self.residual_history[s..e])
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` from `x = 0`.
pub fn fgmres(
    a: &dyn Operator,
    m: &dyn Operator,
    b: &[f64],
    params: &KrylovParams,
) -> Result<(Vec<f64>, SolveStats), KrylovError> {
    fgmres_with_guess(a, m, b, vec![0.0; b.len()], params)
}

pub fn fgmres_with_guess(
    a: &dyn Operator,
    m: &dyn Operator,
    b: &[f64],
    mut x: Vec<f64>,
    params: &KrylovParams,
) -> Result<(Vec<f64>, SolveStats), KrylovError> {
    params.validate()?;
    let n = b.len();
    for got in [a.dim(), m.dim(), x.len()] {
        if got != n {
            return Err(KrylovError::DimensionMismatch { expected: n, got });
        }
    }
    let mut stats = SolveStats::default();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        stats.converged = true;
        stats.final_relres = 0.0;
        return Ok((vec![0.0; n], stats));
    }
    let restart = params.restart;
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    loop {
        a.apply(&x, &mut r)?;
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let beta = norm(&r);
        if !beta.is_finite() {
            return Err(KrylovError::Divergence {
                iteration: stats.iterations,
            });
        }
        stats.final_relres = beta / bnorm;
        stats.cycle_starts.push(stats.residual_history.len());
        stats.residual_history.push(stats.final_relres);
        if stats.final_relres <= params.tol {
            stats.converged = true;
            break;
        }
        if stats.iterations >= params.max_iters {
            break;
        }

        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|x| x / beta).collect()];
        let mut z: Vec<Vec<f64>> = Vec::new();
        // column-major Hessenberg, column j has j + 2 entries
        let mut h: Vec<Vec<f64>> = Vec::new();
        let mut cs: Vec<f64> = Vec::new();
        let mut sn: Vec<f64> = Vec::new();
        let mut g = vec![beta];
        while z.len() < restart && stats.iterations < params.max_iters {
            let j = z.len();
            let mut zj = vec![0.0; n];
            m.apply(&v[j], &mut zj)?;
            stats.precond_applies += 1;
            a.apply(&zj, &mut w)?;
            let mut col = vec![0.0; j + 2];
            let before = norm(&w);
            for (i, vi) in v.iter().enumerate() {
                let hij = dot(&w, vi);
                col[i] = hij;
                for (wk, vk) in w.iter_mut().zip(vi) {
                    *wk -= hij * vk;
                }
            }
            let mut hnext = norm(&w);
            // one more modified Gram-Schmidt pass after heavy cancellation
            if hnext < 0.7 * before {
                for (i, vi) in v.iter().enumerate() {
                    let c = dot(&w, vi);
                    col[i] += c;
                    for (wk, vk) in w.iter_mut().zip(vi) {
                        *wk -= c * vk;
                    }
                }
                hnext = norm(&w);
            }
            col[j + 1] = hnext;
            stats.iterations += 1;
            if col.iter().any(|c| !c.is_finite()) {
                return Err(KrylovError::Divergence {
                    iteration: stats.iterations,
                });
            }
            for i in 0..j {
                let (c, s) = (cs[i], sn[i]);
                let (hi, hi1) = (col[i], col[i + 1]);
                col[i] = c * hi + s * hi1;
                col[i + 1] = -s * hi + c * hi1;
            }
            let (hjj, hj1) = (col[j], col[j + 1]);
            let rho = hjj.hypot(hj1);
            let (c, s) = if rho == 0.0 {
                (1.0, 0.0)
            } else {
                (hjj / rho, hj1 / rho)
            };
            col[j] = rho;
            col[j + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            let gj = g[j];
            g[j] = c * gj;
            g.push(-s * gj);
            h.push(col);
            z.push(zj);
            let est = g[j + 1].abs() / bnorm;
            stats.residual_history.push(est);
            let breakdown = hnext <= 1e-14 * rho.max(f64::MIN_POSITIVE) || hnext == 0.0;
            if !breakdown {
                v.push(w.iter().map(|x| x / hnext).collect());
            }
            if est <= params.tol || breakdown {
                break;
            }
        }
        if params.track_orthogonality {
            let loss = orthogonality_loss(&v);
            stats.orthogonality_loss =
                Some(stats.orthogonality_loss.map_or(loss, |l: f64| l.max(loss)));
        }
        // back substitution on the rotated Hessenberg matrix
        let k = z.len();
        let mut y = g[..k].to_vec();
        for i in (0..k).rev() {
            for jj in i + 1..k {
                y[i] -= h[jj][i] * y[jj];
            }
            y[i] /= h[i][i];
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(KrylovError::Divergence {
                iteration: stats.iterations,
            });
        }
        for (yi, zi) in y.iter().zip(&z) {
            for (xk, zk) in x.iter_mut().zip(zi) {
                *xk += yi * zk;
            }
        }
    }
    Ok((x, stats))
}

fn orthogonality_loss(v: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..v.len() {
        for j in 0..=i {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot(&v[i], &v[j]) - target).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    fn dense_solve(a: &CsrMatrix, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let lu = crate::dense::DenseLu::factor(n, a.to_dense()).unwrap();
        let mut x = b.to_vec();
        lu.solve_in_place(&mut x);
        x
    }

    fn assert_monotone(stats: &SolveStats) {
        for cycle in stats.cycles() {
            for w in cycle[1..].windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12), "{cycle:?}");
            }
        }
    }

    #[test]
    fn identity_converges_in_one_iteration() {
        let a = CsrMatrix::identity(5);
        let b = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let (x, s) = fgmres(&a, &Identity(5), &b, &KrylovParams::default()).unwrap();
        assert!(s.converged);
        assert_eq!(s.iterations, 1);
        for (p, q) in x.iter().zip(&b) {
            assert!((p - q).abs() <= 1e-14);
        }
    }

    #[test]
    fn zero_rhs() {
        let a = tridiag(4);
        let (x, s) = fgmres(&a, &Identity(4), &[0.0; 4], &KrylovParams::default()).unwrap();
        assert_eq!(x, vec![0.0; 4]);
        assert!(s.converged);
        assert_eq!(s.iterations, 0);
    }

    #[test]
    fn exact_preconditioner_one_iteration() {
        let a = CsrMatrix::from_dense(3, 3, &[4.0, 1.0, 0.0, 2.0, 5.0, 1.0, 0.0, 3.0, 6.0]);
        let lu = crate::dense::DenseLu::factor(3, a.to_dense()).unwrap();
        let m = from_fn(3, move |x, y| {
            y.copy_from_slice(x);
            lu.solve_in_place(y);
            Ok(())
        });
        let (_, s) = fgmres(&a, &m, &[1.0, -1.0, 2.0], &KrylovParams::default()).unwrap();
        assert!(s.converged);
        assert_eq!(s.iterations, 1);
    }

    #[test]
    fn tridiagonal_matches_direct_solve() {
        let n = 100;
        let a = tridiag(n);
        // symmetric rhs: only the 50 symmetric eigenmodes are excited
        let b = vec![1.0; n];
        let params = KrylovParams {
            track_orthogonality: true,
            ..Default::default()
        };
        let (x, s) = fgmres(&a, &Identity(n), &b, &params).unwrap();
        assert!(s.converged);
        assert!(s.iterations <= 100, "{}", s.iterations);
        let xd = dense_solve(&a, &b);
        let err = norm(&x.iter().zip(&xd).map(|(p, q)| p - q).collect::<Vec<_>>()) / norm(&xd);
        assert!(err <= 1e-5, "{err}");
        assert!(
            s.orthogonality_loss.unwrap() <= 1e-8,
            "{:?} its {}",
            s.orthogonality_loss,
            s.iterations
        );
        assert_monotone(&s);
    }

    #[test]
    fn restarts_keep_cycles_monotone() {
        let n = 80;
        let a = tridiag(n);
        let b = vec![1.0; n];
        let params = KrylovParams {
            restart: 10,
            max_iters: 2000,
            ..Default::default()
        };
        let (_, s) = fgmres(&a, &Identity(n), &b, &params).unwrap();
        assert!(s.converged);
        assert!(s.cycle_starts.len() > 1);
        assert_monotone(&s);
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let a = tridiag(50);
        let params = KrylovParams {
            max_iters: 3,
            ..Default::default()
        };
        let (_, s) = fgmres(&a, &Identity(50), &vec![1.0; 50], &params).unwrap();
        assert!(!s.converged);
        assert_eq!(s.iterations, 3);
        assert!(s.final_relres > 1e-6);
    }

    #[test]
    fn nan_is_divergence() {
        let a = from_fn(2, |_x, y| {
            y.fill(f64::NAN);
            Ok(())
        });
        let e = fgmres(&a, &Identity(2), &[1.0, 1.0], &KrylovParams::default()).unwrap_err();
        assert!(matches!(e, KrylovError::Divergence { .. }));
    }

    /// Plain right-preconditioned GMRES (x = M V y) for cross-checking.
    fn gmres_reference(a: &CsrMatrix, m: &dyn Operator, b: &[f64], k: usize) -> Vec<f64> {
        let n = b.len();
        let beta = norm(b);
        let mut v = vec![b.iter().map(|x| x / beta).collect::<Vec<_>>()];
        let mut hess = vec![vec![0.0; k]; k + 1];
        for j in 0..k {
            let mut z = vec![0.0; n];
            m.apply(&v[j], &mut z).unwrap();
            let mut w = a.spmv(&z).unwrap();
            for i in 0..=j {
                hess[i][j] = dot(&w, &v[i]);
                for t in 0..n {
                    w[t] -= hess[i][j] * v[i][t];
                }
            }
            hess[j + 1][j] = norm(&w);
            v.push(w.iter().map(|x| x / hess[j + 1][j]).collect());
        }
        // least squares via normal equations on the small Hessenberg system
        let mut ata = vec![0.0; k * k];
        let mut atb = vec![0.0; k];
        for i in 0..k {
            atb[i] = hess[0][i] * beta;
            for j in 0..k {
                ata[i * k + j] = (0..=k).map(|r| hess[r][i] * hess[r][j]).sum();
            }
        }
        let lu = crate::dense::DenseLu::factor(k, ata).unwrap();
        lu.solve_in_place(&mut atb);
        let mut vy = vec![0.0; n];
        for j in 0..k {
            for t in 0..n {
                vy[t] += atb[j] * v[j][t];
            }
        }
        let mut x = vec![0.0; n];
        m.apply(&vy, &mut x).unwrap();
        x
    }

    #[test]
    fn fixed_preconditioner_matches_standard_gmres() {
        let n = 30;
        let a = tridiag(n);
        let diag = from_fn(n, |x, y| {
            for (yi, xi) in y.iter_mut().zip(x) {
                *yi = xi / 2.0;
            }
            Ok(())
        });
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        for k in [3, 6, 9] {
            let params = KrylovParams {
                max_iters: k,
                tol: 1e-300,
                ..Default::default()
            };
            let (x, _) = fgmres(&a, &diag, &b, &params).unwrap();
            let xr = gmres_reference(&a, &diag, &b, k);
            let diff = norm(&x.iter().zip(&xr).map(|(p, q)| p - q).collect::<Vec<_>>());
            assert!(diff <= 1e-10 * norm(&xr).max(1.0), "k={k} diff={diff}");
        }
    }
}
