use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exec::Exec;
use crate::network::{holder_bound, Arch, Engine, MlpParams};
use crate::problem::{rng_for, Stream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheckConfig {
    pub networks: usize,
    pub k_max: usize,
    pub max_depth: usize,
    pub max_width: usize,
    pub max_d1: usize,
    /// Parameters are uniform on `[−scale, scale]`.
    pub scale: f64,
    /// Half-width of the cube `[−r, r]^{d1}` that is grid-sampled.
    pub radius: f64,
    /// Total grid points per network, split evenly across axes.
    pub grid_points: usize,
    pub seed: u64,
}

impl Default for BoundCheckConfig {
    fn default() -> Self {
        BoundCheckConfig {
            networks: 100,
            k_max: 2,
            max_depth: 3,
            max_width: 6,
            max_d1: 3,
            scale: 1.5,
            radius: 2.0,
            grid_points: 1000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheckResult {
    pub networks: usize,
    /// Derivative sups compared against a bound.
    pub checks: usize,
    pub violations: usize,
    /// Largest ratio `sup |∂^α u| / bound(|α|)` seen.
    pub max_ratio: f64,
}

fn grid(d1: usize, radius: f64, total: usize) -> Vec<f64> {
    let per = ((total as f64).powf(1.0 / d1 as f64).floor() as usize).max(2);
    let count = per.pow(d1 as u32);
    let mut pts = Vec::with_capacity(count * d1);
    for idx in 0..count {
        let mut r = idx;
        for _ in 0..d1 {
            pts.push(-radius + 2.0 * radius * (r % per) as f64 / (per - 1) as f64);
            r /= per;
        }
    }
    pts
}

/// Compare grid-sampled sups of every `|∂^α u_θ|`, `|α| ≤ k_max`, with the
/// derivative bound of order `|α|` on random networks.
pub fn bound_check(cfg: &BoundCheckConfig, exec: Exec) -> Result<BoundCheckResult> {
    let mut rng = rng_for(cfg.seed, Stream::Init);
    let mut out = BoundCheckResult { networks: cfg.networks, checks: 0, violations: 0, max_ratio: 0.0 };
    for _ in 0..cfg.networks {
        let h = rng.random_range(1..=cfg.max_depth);
        let d = rng.random_range(1..=cfg.max_width);
        let d1 = rng.random_range(1..=cfg.max_d1);
        let d2 = rng.random_range(1..=2);
        let arch = Arch::new(h, d, d1, d2)?;
        let theta: Vec<f64> = (0..arch.num_params()).map(|_| rng.random_range(-cfg.scale..=cfg.scale)).collect();
        let params = MlpParams::from_theta(arch, theta)?;
        let engine = Engine::new(arch, cfg.k_max)?;
        let pts = grid(d1, cfg.radius, cfg.grid_points);
        let jets = engine.evaluate(params.theta(), &pts, exec)?;
        let bounds: Vec<f64> = (0..=cfg.k_max).map(|k| holder_bound(&params, k).map(|b| b.bound)).collect::<Result<_>>()?;
        let layout = engine.layout();
        for i in 0..d2 {
            for (c, alpha) in layout.indices().iter().enumerate() {
                let sup = (0..jets.len()).map(|p| jets.get(p, i, c).abs()).fold(0.0, f64::max);
                let b = bounds[alpha.order() as usize];
                out.checks += 1;
                if sup > b {
                    out.violations += 1;
                }
                out.max_ratio = out.max_ratio.max(sup / b);
            }
        }
    }
    Ok(out)
}
