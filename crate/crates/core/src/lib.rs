//! Bayesian optimization over Cartesian grids with a Bayesian kernelized
//! tensor factorization (BKTF) surrogate, exact-GP baselines, benchmark
//! objectives and a performance-profile evaluation harness.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchfns;
pub mod bktf;
pub mod error;
pub mod gp;
pub mod grid;
pub mod harness;
pub mod kernels;
pub mod optim;
pub mod slice;

pub use error::{Error, Result};
pub use grid::{GridIndex, GridSpace, Normalizer};
