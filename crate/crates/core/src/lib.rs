//! Dantzig selector for Cox's proportional hazards model.
//!
//! The estimator minimises `||beta||_1` over the set of coefficient vectors
//! whose partial-likelihood score has sup-norm at most `gamma`. This crate
//! provides everything needed to run and audit it at desk scale:
//!
//! - [`survival_sim`]: Cox-model data with known sparse truth, CSV I/O.
//! - [`partial_likelihood`]: log partial likelihood, score, observed
//!   information and the exponential sandwich diagnostic.
//! - [`factors`]: cone-restricted matrix functionals (compatibility factor,
//!   weak cone invertibility factors, restricted eigenvalue, `phi_2S`),
//!   restricted isometry / orthogonality constants and the Monte Carlo
//!   population information matrix.
//! - [`dantzig`]: the estimator itself, solved by sequential linearisation
//!   with a dense simplex inner step.
//! - [`bounds`]: score tail bounds, the error bounds that the estimator is
//!   known to satisfy, and the replication harness that checks them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod dantzig;
pub mod error;
pub mod factors;
pub mod partial_likelihood;
pub mod seed;
pub mod survival_sim;

pub use error::{CsvError, Error, Result};
