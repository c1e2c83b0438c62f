//! Generalized canonical correlation analysis by range-subspace
//! intersection.
//!
//! Multiple data views share an entity dimension; each view is modeled as
//! `X^(n) = [M, C^(n)] · S^(n)ᵀ`, where `M` spans a subspace common to all
//! views and `C^(n)` spans directions individual to view `n`. This crate
//! provides:
//!
//! * [`model`] — synthesis of ground-truth instances, SNR-controlled noise,
//!   and factor canonicalization;
//! * [`racing`] — recovery of the common subspace through per-view
//!   truncated SVDs and the nullspace of a pairwise difference system;
//! * [`identifiability`] — algebraic checks telling when that recovery is
//!   possible at all, plus an explicit full-rank certificate construction;
//! * [`baselines`] — classical two-view CCA and exact MAXVAR for
//!   comparison;
//! * [`linalg`] — the shared dense/sparse kernels (truncated SVD, nullspace
//!   extraction, subspace angles, rank decisions).
//!
//! Everything is deterministic given explicit seeds, and computational
//! warnings (ill-posedness, rank deficiency) are reported in result types
//! rather than raised as errors.

pub mod error;

mod backend;

pub mod baselines;
pub mod identifiability;
pub mod linalg;
pub mod model;
pub mod racing;

pub use error::{Error, Result};
pub use linalg::{SparseMatrix, SubspaceBasis};
pub use model::{mix_seed, GccaModel, ModelDims, SynthesisMode, ViewMatrix, ViewSet};
pub use racing::{racing, RacingConfig, RacingResult};
