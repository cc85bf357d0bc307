//! Bounds on the best separable approximation (BSA) of permutation-invariant
//! many-qubit states.
//!
//! Lower bounds come from the complete set of generalized spin-squeezing
//! inequalities evaluated on first and second collective-spin moments
//! ([`ssi`]). Upper bounds come from explicit separable ensembles of
//! symmetrized product states ([`sep`]). Thermal states of the fully-connected
//! XXZ model ([`thermal`]) are the main application; every state is carried in
//! the block-diagonal Schur-Weyl representation of [`blocks`].

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod blocks;
pub mod cli;
pub mod dense;
pub mod error;
pub mod schur;
pub mod sep;
pub mod ssi;
pub mod sweep;
pub mod thermal;
pub mod wigner;

pub use blocks::{BlockDiagonalState, MomentSummary, SectorIndex};
pub use error::{Error, Result};
pub use schur::SchurBasis;
pub use ssi::{SsiResult, Symmetry};
pub use thermal::{ThermalPoint, XxzParams};

/// Largest particle number handled by the dense / Schur-basis paths unless overridden.
pub const DEFAULT_N_MAX: u32 = 10;
