//! Variable-block multilevel ILU preconditioning for general sparse systems.
//!
//! The crate is organised bottom-up:
//!
//! * [`sparse`]: CSR / VBCSR storage, permutations, block partitions and
//!   block-structure metrics.
//! * [`io`]: Matrix Market reader/writer, a binary CSR cache and the plain
//!   text partition formats.
//! * [`compression`]: exact (checksum), angle-based and graph-based
//!   discovery of dense block structure, and quotient graphs.
//! * [`ordering`]: two-sided scaling and block independent set orderings.
//! * [`factor`]: dense pivot kernels, block ILUT and the multilevel
//!   VBARMS factorization and solve.
//! * [`krylov`]: restarted flexible GMRES.
//! * [`dd`]: quotient-graph partitioning, local systems and the
//!   Block-Jacobi, restricted additive Schwarz and Schur complement
//!   global preconditioners.
//! * [`gallery`]: seeded synthetic test matrices with planted block
//!   structure.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod compression;
pub mod dd;
pub mod dense;
pub mod error;
pub mod factor;
pub mod gallery;
pub mod io;
pub mod krylov;
pub mod ordering;
pub mod sparse;

pub use error::{Error, Result};
