use std::str::FromStr;

use rayon::prelude::*;

use crate::compression::build_quotient_graph;
use crate::factor::{FactorParams, ForwardState, VbarmsPreconditioner};
use crate::krylov::{fgmres, from_fn, KrylovError, KrylovParams, Operator};
use crate::sparse::{symmetrized_pattern, BlockPartition, CsrMatrix, SparseError};

use super::{build_local_systems, partition_quotient_graph, DdError, DomainMap, LocalSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlobalKind {
    BlockJacobi,
    Ras,
    Schur,
}

impl FromStr for GlobalKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bj" => Ok(Self::BlockJacobi),
            "ras" => Ok(Self::Ras),
            "schur" => Ok(Self::Schur),
            other => Err(format!("unknown global preconditioner '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DdParams {
    pub factor: FactorParams,
    /// Inner interface iteration of the Schur preconditioner.
    pub inner: KrylovParams,
}

impl Default for DdParams {
    fn default() -> Self {
        Self {
            factor: FactorParams::default(),
            inner: KrylovParams {
                tol: 1e-2,
                max_iters: 5,
                restart: 5,
                track_orthogonality: false,
            },
        }
    }
}

/// Interface bookkeeping of one domain in the Schur preconditioner:
/// last-level position `k` holds interface unknown `iface[k]`.
#[derive(Debug, Clone)]
struct SchurMap {
    iface: Vec<usize>,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GlobalPreconditioner {
    kind: GlobalKind,
    n: usize,
    overlap: usize,
    inner: KrylovParams,
    locals: Vec<LocalSystem>,
    solvers: Vec<VbarmsPreconditioner>,
    schur: Vec<Option<SchurMap>>,
    iface_offsets: Vec<usize>,
}

impl GlobalPreconditioner {
    /// Partitions `a` into `n_domains` domains over the quotient graph of
    /// `partition` and factors every local system.
    pub fn new(
        a: &CsrMatrix,
        partition: &BlockPartition,
        n_domains: usize,
        kind: GlobalKind,
        overlap: usize,
        params: &DdParams,
    ) -> Result<Self, DdError> {
        let qg = build_quotient_graph(&symmetrized_pattern(a)?, partition);
        let map = partition_quotient_graph(&qg, n_domains)?;
        Self::with_map(a, partition, &map, kind, overlap, params)
    }

    /// Like [`Self::new`] with a precomputed domain map.
    pub fn with_map(
        a: &CsrMatrix,
        partition: &BlockPartition,
        map: &DomainMap,
        kind: GlobalKind,
        overlap: usize,
        params: &DdParams,
    ) -> Result<Self, DdError> {
        let overlap = if kind == GlobalKind::Ras { overlap } else { 0 };
        let locals = build_local_systems(a, partition, map, overlap)?;
        Self::from_locals(a.n_rows(), locals, kind, params)
    }

    pub fn from_locals(
        n: usize,
        locals: Vec<LocalSystem>,
        kind: GlobalKind,
        params: &DdParams,
    ) -> Result<Self, DdError> {
        params.inner.validate()?;
        let built: Vec<(VbarmsPreconditioner, Option<SchurMap>)> = locals
            .par_iter()
            .map(|l| {
                factor_local(l, kind, &params.factor).map_err(|source| DdError::Factor {
                    domain: l.domain(),
                    source,
                })
            })
            .collect::<Result<_, _>>()?;
        let (solvers, schur): (Vec<_>, Vec<_>) = built.into_iter().unzip();
        let mut iface_offsets = vec![0];
        for l in &locals {
            iface_offsets.push(iface_offsets.last().unwrap() + l.n_interface());
        }
        let overlap = locals
            .iter()
            .map(|l| l.ext_rows().len() - l.rows().len())
            .max()
            .unwrap_or(0);
        Ok(Self {
            kind,
            n,
            overlap,
            inner: params.inner,
            locals,
            solvers,
            schur,
            iface_offsets,
        })
    }

    pub fn kind(&self) -> GlobalKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn n_domains(&self) -> usize {
        self.locals.len()
    }

    pub fn locals(&self) -> &[LocalSystem] {
        &self.locals
    }

    pub fn local_solvers(&self) -> &[VbarmsPreconditioner] {
        &self.solvers
    }

    /// Largest number of overlap rows added to a domain.
    pub fn overlap_rows(&self) -> usize {
        self.overlap
    }

    /// Total number of interface unknowns.
    pub fn n_interface(&self) -> usize {
        *self.iface_offsets.last().unwrap()
    }

    /// `sum nnz(local factors) / sum nnz(local matrices)`.
    pub fn memory_ratio(&self) -> f64 {
        let factors: usize = self.solvers.iter().map(VbarmsPreconditioner::nnz).sum();
        let matrices: usize = self
            .locals
            .iter()
            .map(|l| {
                if self.kind == GlobalKind::Ras {
                    l.ext_matrix().nnz()
                } else {
                    l.matrix().nnz()
                }
            })
            .sum();
        factors as f64 / matrices.max(1) as f64
    }

    /// Applies the preconditioner to `r`.
    pub fn apply(&self, r: &[f64]) -> Result<Vec<f64>, DdError> {
        if r.len() != self.n {
            return Err(SparseError::DimensionMismatch {
                expected: self.n,
                got: r.len(),
            }
            .into());
        }
        match self.kind {
            GlobalKind::BlockJacobi | GlobalKind::Ras => self.apply_additive(r),
            GlobalKind::Schur => self.apply_schur(r),
        }
    }

    fn apply_additive(&self, r: &[f64]) -> Result<Vec<f64>, DdError> {
        let parts: Vec<Vec<f64>> = self
            .locals
            .par_iter()
            .zip(&self.solvers)
            .map(|(l, s)| {
                let b: Vec<f64> = l.ext_rows().iter().map(|&g| r[g]).collect();
                s.solve(&b)
            })
            .collect::<Result<_, _>>()?;
        let mut out = vec![0.0; self.n];
        for (l, x) in self.locals.iter().zip(parts) {
            for (&g, v) in l.rows().iter().zip(x) {
                out[g] = v;
            }
        }
        Ok(out)
    }

    fn apply_schur(&self, r: &[f64]) -> Result<Vec<f64>, DdError> {
        // (1) local forward sweeps give the reduced right-hand sides g'_i
        let fwd: Vec<Local> = self
            .locals
            .par_iter()
            .zip(&self.solvers)
            .zip(&self.schur)
            .map(|((l, s), map)| {
                let b: Vec<f64> = l.rows().iter().map(|&g| r[g]).collect();
                Ok(match map {
                    None => Local::Done(s.solve(&b)?),
                    Some(_) => Local::Pending(s.forward(&b)?),
                })
            })
            .collect::<Result<_, SparseError>>()?;
        let mut g = vec![0.0; self.n_interface()];
        for (d, f) in fwd.iter().enumerate() {
            if let (Local::Pending(state), Some(map)) = (f, &self.schur[d]) {
                let base = self.iface_offsets[d];
                for (k, &q) in map.iface.iter().enumerate() {
                    g[base + q] = state.tail[k] / map.row_scale[k];
                }
            }
        }

        // (2) interface system
        let y = if g.is_empty() {
            g
        } else {
            let a = from_fn(g.len(), |x: &[f64], out: &mut [f64]| {
                self.schur_matvec(x, out)
            });
            let m = from_fn(g.len(), |x: &[f64], out: &mut [f64]| {
                self.schur_precond(x, out)
            });
            fgmres(&a, &m, &g, &self.inner)?.0
        };

        // (3) recover interior unknowns
        let parts: Vec<Vec<f64>> = fwd
            .into_par_iter()
            .enumerate()
            .map(|(d, f)| match (f, &self.schur[d]) {
                (Local::Done(x), _) => x,
                (Local::Pending(state), Some(map)) => {
                    let base = self.iface_offsets[d];
                    let z: Vec<f64> = map
                        .iface
                        .iter()
                        .zip(&map.col_scale)
                        .map(|(&q, c)| y[base + q] / c)
                        .collect();
                    self.solvers[d].backward(state, &z)
                }
                (Local::Pending(_), None) => unreachable!("pending domains have an interface"),
            })
            .collect();
        let mut out = vec![0.0; self.n];
        for (l, x) in self.locals.iter().zip(parts) {
            for (&g, v) in l.rows().iter().zip(x) {
                out[g] = v;
            }
        }
        Ok(out)
    }

    /// `(S y)_i = S_i y_i + sum_j E_ij y_j` on the concatenated interface.
    fn schur_matvec(&self, y: &[f64], out: &mut [f64]) -> Result<(), KrylovError> {
        let parts: Vec<Vec<f64>> = (0..self.locals.len())
            .into_par_iter()
            .map(|d| {
                let Some(map) = &self.schur[d] else {
                    return Ok(Vec::new());
                };
                let base = self.iface_offsets[d];
                let yi = &y[base..self.iface_offsets[d + 1]];
                let s = self.solvers[d]
                    .last_matrix()
                    .expect("protected factorization keeps the last matrix");
                let x: Vec<f64> = map
                    .iface
                    .iter()
                    .zip(&map.col_scale)
                    .map(|(&q, c)| yi[q] / c)
                    .collect();
                let sx = s
                    .spmv(&x)
                    .map_err(|e| KrylovError::Operator(e.to_string()))?;
                let mut o = vec![0.0; yi.len()];
                for (k, &q) in map.iface.iter().enumerate() {
                    o[q] = sx[k] / map.row_scale[k];
                }
                for c in self.locals[d].couplings() {
                    let j = c.neighbor;
                    let yj = &y[self.iface_offsets[j]..self.iface_offsets[j + 1]];
                    let e = c
                        .matrix
                        .spmv(yj)
                        .map_err(|e| KrylovError::Operator(e.to_string()))?;
                    for (a, b) in o.iter_mut().zip(e) {
                        *a += b;
                    }
                }
                Ok(o)
            })
            .collect::<Result<_, KrylovError>>()?;
        for (d, o) in parts.into_iter().enumerate() {
            out[self.iface_offsets[d]..self.iface_offsets[d + 1]].copy_from_slice(&o);
        }
        Ok(())
    }

    /// Block-diagonal local Schur solves.
    fn schur_precond(&self, v: &[f64], out: &mut [f64]) -> Result<(), KrylovError> {
        let parts: Vec<Vec<f64>> = (0..self.locals.len())
            .into_par_iter()
            .map(|d| {
                let Some(map) = &self.schur[d] else {
                    return Vec::new();
                };
                let vi = &v[self.iface_offsets[d]..self.iface_offsets[d + 1]];
                let mut rhs: Vec<f64> = map
                    .iface
                    .iter()
                    .zip(&map.row_scale)
                    .map(|(&q, r)| vi[q] * r)
                    .collect();
                self.solvers[d].solve_last(&mut rhs);
                let mut o = vec![0.0; vi.len()];
                for (k, &q) in map.iface.iter().enumerate() {
                    o[q] = rhs[k] * map.col_scale[k];
                }
                o
            })
            .collect();
        for (d, o) in parts.into_iter().enumerate() {
            out[self.iface_offsets[d]..self.iface_offsets[d + 1]].copy_from_slice(&o);
        }
        Ok(())
    }
}

enum Local {
    Done(Vec<f64>),
    Pending(ForwardState),
}

fn factor_local(
    l: &LocalSystem,
    kind: GlobalKind,
    params: &FactorParams,
) -> Result<(VbarmsPreconditioner, Option<SchurMap>), crate::factor::FactorError> {
    match kind {
        GlobalKind::BlockJacobi => Ok((
            VbarmsPreconditioner::with_partition(l.matrix(), l.owned_partition(), params)?,
            None,
        )),
        GlobalKind::Ras => Ok((
            VbarmsPreconditioner::with_partition(l.ext_matrix(), l.ext_partition(), params)?,
            None,
        )),
        GlobalKind::Schur if l.n_interface() == 0 => Ok((
            VbarmsPreconditioner::with_partition(l.matrix(), l.owned_partition(), params)?,
            None,
        )),
        GlobalKind::Schur => {
            let ni = l.n_interior();
            let flags: Vec<bool> = (0..l.rows().len()).map(|k| k >= ni).collect();
            let p = VbarmsPreconditioner::protected(l.matrix(), l.partition(), &flags, params)?;
            let m = p.last_map();
            let map = SchurMap {
                iface: m.origin.iter().map(|&k| k - ni).collect(),
                row_scale: m.row_scale.clone(),
                col_scale: m.col_scale.clone(),
            };
            Ok((p, Some(map)))
        }
    }
}

impl Operator for GlobalPreconditioner {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<(), KrylovError> {
        let z = GlobalPreconditioner::apply(self, x).map_err(|e| match e {
            DdError::Krylov(k) => k,
            other => KrylovError::Operator(other.to_string()),
        })?;
        y.copy_from_slice(&z);
        Ok(())
    }
}
