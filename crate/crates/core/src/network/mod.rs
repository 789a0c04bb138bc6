//! Tanh multilayer perceptrons and bounds on their derivatives.

mod combinatorics;
mod engine;
mod mlp;

pub use combinatorics::{
    bell_number, c_const, eval_poly, tanh_deriv_bound, tanh_deriv_poly, weighted_compositions, BELL_MAX,
    C_CONST_MAX_H, C_CONST_MAX_K, TANH_POLY_MAX,
};
pub use engine::{Engine, JetBatch, BLOCK};
pub use mlp::{forward_jet, Arch, Checkpoint, CheckpointLayer, MlpParams};

use serde::Serialize;

use crate::error::Result;

/// Upper bound on `max_{|α| ≤ K} sup |∂^α u_θ|` in terms of `‖θ‖₂`.
#[derive(Clone, Debug, Serialize)]
pub struct HolderBound {
    pub k: usize,
    pub h: usize,
    pub d: usize,
    pub c_kh: f64,
    pub bound: f64,
}

/// `C_{K,H} (D+1)^{HK+1} (1+‖θ‖₂)^{HK} ‖θ‖₂`.
pub fn holder_bound(params: &MlpParams, k: usize) -> Result<HolderBound> {
    let a = params.arch();
    let c_kh = c_const(k, a.h)?;
    let norm = params.param_norm();
    let hk = (a.h * k) as i32;
    let bound = c_kh * ((a.d + 1) as f64).powi(hk + 1) * (1.0 + norm).powi(hk) * norm;
    Ok(HolderBound { k, h: a.h, d: a.d, c_kh, bound })
}
