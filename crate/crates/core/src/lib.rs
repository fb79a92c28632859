//! Numerical laboratory for the equivalence between density estimation from
//! `n` i.i.d. observations and from a Poisson process with intensity `n·f`.
//!
//! Functions live on equal partitions of `[0, 1)` ([`gridfn`]) and every
//! integral is evaluated exactly on a common refinement. Random work goes
//! through the seeded replication engine in [`mc`], so all Monte Carlo
//! output is reproducible bit for bit.

// `!(x >= a)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod besov;
pub mod bounds;
pub mod cli;
pub mod counterexample;
pub mod densities;
pub mod dist;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod gridfn;
pub mod losses;
pub mod mc;

pub use error::{Error, Result};
pub use gridfn::{Density, GridFunction};
pub use mc::{McEngine, McResult, RngSpec, Workers};
