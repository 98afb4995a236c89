//! Partitioned distinguishability measures for finite-dimensional quantum
//! states and probability distributions.
//!
//! The crate is organized bottom-up:
//!
//! - [`matops`]: dense complex kernels (singular values, Ky Fan and Schatten
//!   norms, PSD square roots, partial trace, Jordan parts, L/R factors).
//! - [`state`]: density matrices and seeded random generators.
//! - [`measurement`]: POVMs, the two trace-defined families, Helstrom PVM.
//! - [`classical`]: entropies and partitioned measures on distributions.
//! - [`quantum`]: partitioned trace distances, partial fidelities, and the
//!   multi-start Shannon-distinguishability estimator.
//! - [`verify`]: randomized inequality suites with replayable witnesses.
//! - [`decay`]: exponential-indistinguishability analysis of state families.
//! - [`io`] and [`cli`]: JSON file formats and the `partdist` command line.

// `!(x >= y)` is used deliberately so that NaN lands on the error path.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
pub mod cli;
pub mod decay;
pub mod error;
pub mod io;
pub mod matops;
pub mod measurement;
pub mod quantum;
pub mod state;
pub mod verify;

pub use error::{Error, Result};
