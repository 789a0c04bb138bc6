use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exec::Exec;
use crate::network::{Arch, MlpParams};
use crate::operators;
use crate::problem::{heat_problem, rng_for, Counts, Stream};
use crate::risk::{Lambdas, McConfig, RiskKind, RiskReport, RiskSpec};
use crate::trainer::{train, Optimizer, Schedule, ScheduleKind, TrainConfig, TrainResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatSolveConfig {
    pub n_e: usize,
    pub n_r: usize,
    pub depth: usize,
    pub width: usize,
    /// Depth of the initial condition `tanh^{∘H}` profile.
    pub ic_depth: usize,
    pub horizon: f64,
    pub lambda_t: f64,
    /// Sobolev order; at least the operator order 2.
    pub m: usize,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    pub monitor_every: usize,
    /// Monte Carlo points per term for the overfitting gap; zero disables it.
    pub n_og: usize,
}

impl Default for HeatSolveConfig {
    fn default() -> Self {
        HeatSolveConfig {
            n_e: 2000,
            n_r: 2000,
            depth: 2,
            width: 32,
            ic_depth: 2,
            horizon: 1.0,
            lambda_t: 0.01,
            m: 2,
            epochs: 2000,
            lr: 1e-2,
            seed: 0,
            monitor_every: 100,
            n_og: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatSolveSummary {
    pub lambdas: Lambdas,
    pub best_step: usize,
    pub best: RiskReport,
    /// Mean squared boundary misfit of the best iterate.
    pub boundary_mse: f64,
    /// Mean squared residual of the best iterate.
    pub residual_mse: f64,
}

pub struct HeatSolveResult {
    pub summary: HeatSolveSummary,
    pub train: TrainResult,
}

/// Train a Sobolev-regularized PINN on the heat problem with the ridge
/// weight `min(n_e, n_r)^{−κ}`, `κ = 1/(12 + 4H(1 + (2+H)(m+2)))`.
pub fn run_pde_solver_heat(cfg: &HeatSolveConfig, exec: Exec) -> Result<HeatSolveResult> {
    let problem = heat_problem(cfg.ic_depth, cfg.horizon)?;
    let op = operators::heat();
    let schedule = Schedule { kind: ScheduleKind::Thm54, ridge_kappa: None };
    let base = Lambdas { d: 0.0, e: 1.0, ridge: 0.0, t: cfg.lambda_t };
    let lambdas = schedule.lambdas(base, cfg.depth, op.degree(), cfg.m, 0, cfg.n_e, cfg.n_r)?;
    let samples = problem.sample(Counts { n: 0, n_e: cfg.n_e, n_r: cfg.n_r }, cfg.seed)?;
    let spec = RiskSpec { lambdas, m: cfg.m, operators: vec![op], problem, samples };
    spec.validate()?;
    let arch = Arch::new(cfg.depth, cfg.width, 2, 1)?;
    let init = MlpParams::init(arch, &mut rng_for(cfg.seed, Stream::Init));
    let tc = TrainConfig {
        epochs: cfg.epochs,
        lr: cfg.lr,
        optimizer: Optimizer::Adam,
        monitor_every: cfg.monitor_every,
        kind: RiskKind::Sobolev,
        validation: (cfg.n_og > 0).then_some(McConfig { n_boundary: cfg.n_og, n_interior: cfg.n_og, seed: cfg.seed }),
    };
    let train = train(&init, &spec, &tc, exec)?;
    let b = &train.best_report;
    let summary = HeatSolveSummary {
        lambdas,
        best_step: train.best_step,
        best: b.clone(),
        boundary_mse: b.boundary / lambdas.e,
        residual_mse: b.residual,
    };
    Ok(HeatSolveResult { summary, train })
}
