//! Physics-informed neural networks with ridge and Sobolev regularization.
//!
//! The crate is organised bottom-up:
//!
//! - [`autodiff`]: a scalar reverse-mode tape and truncated multivariate jets
//!   carrying exact partial derivatives of network outputs.
//! - [`network`]: the tanh multilayer perceptron, its jet forward pass, the
//!   batched training engine and the parameter-norm bounds.
//! - [`operators`]: polynomial and affine differential operators over a small
//!   serializable expression grammar.
//! - [`problem`]: box domains, boundary faces, seeded sampling.
//! - [`risk`]: empirical, ridge and Sobolev-regularized risks, Monte Carlo
//!   theoretical risk, physics inconsistency and overfitting gap.
//! - [`trainer`]: full-batch gradient descent / Adam and the hyperparameter
//!   schedules.
//! - [`constructions`]: closed-form networks that overfit the unregularized
//!   risk.
//! - [`experiments`]: scripted end-to-end studies.
//!
//! Data-parallel loops (point blocks, Monte Carlo batches, experiment sweeps)
//! go through [`exec`], which uses rayon when the `parallel` feature is on and
//! falls back to a sequential loop otherwise. Results are bitwise identical
//! either way.

// `!(x > 0.0)` style checks deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autodiff;
pub mod constructions;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod network;
pub mod operators;
pub mod problem;
pub mod risk;
pub mod trainer;

pub use error::{Error, Result};
