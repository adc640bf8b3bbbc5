//! Domain decomposition over the quotient graph.
//!
//! Domains are sets of supernodes; each domain runs its own multilevel
//! factorization and the domains are combined by Block-Jacobi, restricted
//! additive Schwarz or a global Schur complement iteration. Domains are
//! processed concurrently and every output row has a single writer, so the
//! results do not depend on scheduling.

mod local;
mod partition;
mod precond;

pub use local::{build_local_systems, Coupling, LocalSystem};
pub use partition::{partition_quotient_graph, DomainMap};
pub use precond::{DdParams, GlobalKind, GlobalPreconditioner};

use thiserror::Error;

use crate::factor::FactorError;
use crate::krylov::KrylovError;
use crate::sparse::SparseError;

#[derive(Debug, Error)]
pub enum DdError {
    #[error("invalid domain decomposition: {0}")]
    InvalidDomains(String),
    #[error("local factorization failed in domain {domain}")]
    Factor {
        domain: usize,
        #[source]
        source: FactorError,
    },
    #[error(transparent)]
    Krylov(#[from] KrylovError),
    #[error(transparent)]
    Sparse(#[from] SparseError),
}
