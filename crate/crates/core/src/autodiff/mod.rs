//! Reverse-mode tape and truncated Taylor jets.
//!
//! A [`Jet`] stores every partial derivative `∂^α u` with `|α| ≤ K` of a scalar
//! quantity at a fixed point. Its entries are generic over [`Scalar`], so the
//! same jet arithmetic runs on plain `f64` and on [`Var`] tape handles. In the
//! latter case network outputs carry exact input derivatives while remaining
//! differentiable with respect to the parameters.

mod jet;
mod multi_index;
mod partitions;
mod scalar;
mod tape;

pub use jet::{jet_variable, FdbTerm, Jet, JetLayout, K_MAX};
pub use multi_index::{multi_indices, num_multi_indices, MultiIndex};
pub use partitions::set_partitions;
pub use scalar::Scalar;
pub use tape::{grad_params, Tape, Var};
