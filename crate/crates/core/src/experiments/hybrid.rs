use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{err_metric, log_log_fit, log_grid, LinearFit};
use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::network::{Arch, MlpParams};
use crate::operators;
use crate::problem::{advection_problem, rng_for, Counts, Stream};
use crate::risk::{physics_inconsistency, ClosedForm, Lambdas, McConfig, RiskKind, RiskReport, RiskSpec};
use crate::trainer::{train, MonitorRow, Optimizer, Rational, Schedule, ScheduleKind, TrainConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HybridConfig {
    pub n_grid: Vec<usize>,
    pub n_e: usize,
    pub n_r: usize,
    pub depth: usize,
    pub width: usize,
    pub seeds: Vec<u64>,
    pub epochs: usize,
    pub lr: f64,
    /// Sobolev order `m`.
    pub m: usize,
    pub sigma: f64,
    pub schedule: Schedule,
    /// Monte Carlo points for `err(n)` and `PI(n)`.
    pub n_mc: usize,
    pub monitor_every: usize,
    /// Monte Carlo points per term for the overfitting gap at monitor steps;
    /// zero disables it.
    pub n_og: usize,
}

impl HybridConfig {
    /// Desk scale: `n_e = n_r = 2000`, `D = 32`, `n ∈ {10, 30, 100, 300}`, three seeds.
    pub fn reduced() -> Self {
        HybridConfig {
            n_grid: vec![10, 30, 100, 300],
            n_e: 2000,
            n_r: 2000,
            depth: 2,
            width: 32,
            seeds: vec![0, 1, 2],
            epochs: 500,
            lr: 1e-2,
            m: 1,
            sigma: 0.1,
            schedule: Schedule { kind: ScheduleKind::Prop58, ridge_kappa: Some(Rational::new(1, 2)) },
            n_mc: 20_000,
            monitor_every: 100,
            n_og: 0,
        }
    }

    /// Full scale: `n_e = n_r = 10⁴`, `D = 100`, twelve values of `n` from 10 to 1000.
    pub fn paper() -> Self {
        HybridConfig {
            n_grid: log_grid(10, 1000, 12),
            n_e: 10_000,
            n_r: 10_000,
            width: 100,
            seeds: vec![0],
            epochs: 2000,
            lr: 1e-3,
            n_og: 2000,
            ..Self::reduced()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HybridRow {
    pub n: usize,
    pub seed: u64,
    pub err: f64,
    pub err_se: f64,
    pub pi: f64,
    pub pi_se: f64,
    pub best_step: usize,
    pub final_risk: RiskReport,
    pub lambdas: Lambdas,
    pub runtime_s: f64,
    #[serde(skip)]
    pub history: Vec<MonitorRow>,
    #[serde(skip)]
    pub params: Option<MlpParams>,
}

/// Seed averages at one sample size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NSummary {
    pub n: usize,
    pub mean_err: f64,
    pub mean_pi: f64,
    pub mean_ln_pi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: HybridConfig,
    pub rows: Vec<HybridRow>,
    pub summary: Vec<NSummary>,
    /// `ln mean err(n)` against `ln n`.
    pub fit: LinearFit,
}

/// Risk specification of the advection problem for `n` observations.
pub fn advection_spec(cfg: &HybridConfig, n: usize, seed: u64) -> Result<RiskSpec> {
    let problem = advection_problem(cfg.sigma);
    let op = operators::advection();
    let base = Lambdas { d: 1.0, e: 1.0, ridge: 0.0, t: 0.0 };
    let lambdas = cfg.schedule.lambdas(base, cfg.depth, op.degree(), cfg.m, n, cfg.n_e, cfg.n_r)?;
    let samples = problem.sample(Counts { n, n_e: cfg.n_e, n_r: cfg.n_r }, seed)?;
    let spec = RiskSpec { lambdas, m: cfg.m, operators: vec![op], problem, samples };
    spec.validate()?;
    Ok(spec)
}

fn run_one(cfg: &HybridConfig, n: usize, seed: u64, exec: Exec) -> Result<HybridRow> {
    let start = Instant::now();
    let spec = advection_spec(cfg, n, seed)?;
    let arch = Arch::new(cfg.depth, cfg.width, 2, 1)?;
    let init = MlpParams::init(arch, &mut rng_for(seed, Stream::Init));
    let tc = TrainConfig {
        epochs: cfg.epochs,
        lr: cfg.lr,
        optimizer: Optimizer::Adam,
        monitor_every: cfg.monitor_every,
        kind: RiskKind::Sobolev,
        validation: (cfg.n_og > 0).then_some(McConfig { n_boundary: cfg.n_og, n_interior: cfg.n_og, seed }),
    };
    let out = train(&init, &spec, &tc, exec)?;
    let truth = ClosedForm::new(2, spec.problem.u_star.clone().expect("advection has a ground truth"))?;
    let err = err_metric(&out.best, &truth, spec.problem.supp(), cfg.n_mc, seed, exec)?;
    let pi = physics_inconsistency(&out.best, &spec, &McConfig { n_boundary: cfg.n_mc, n_interior: cfg.n_mc, seed }, exec)?;
    Ok(HybridRow {
        n,
        seed,
        err: err.value,
        err_se: err.se,
        pi: pi.value,
        pi_se: pi.se,
        best_step: out.best_step,
        final_risk: out.best_report,
        lambdas: spec.lambdas,
        runtime_s: start.elapsed().as_secs_f64(),
        history: out.history,
        params: Some(out.best),
    })
}

/// Train one regularized network per `(n, seed)` and fit the log-log rate of
/// the mean `err(n)`. Runs are distributed over threads when `exec` is
/// parallel; rows are ordered by `n`, then seed.
pub fn run_hybrid_advection(cfg: &HybridConfig, exec: Exec) -> Result<ExperimentResult> {
    if cfg.n_grid.len() < 2 || cfg.seeds.is_empty() {
        return Err(Error::InvalidSpec("the rate fit needs two sample sizes and one seed".into()));
    }
    let jobs: Vec<(usize, u64)> = cfg.n_grid.iter().flat_map(|&n| cfg.seeds.iter().map(move |&s| (n, s))).collect();
    let inner = if exec.is_parallel() && jobs.len() > 1 { Exec::Sequential } else { exec };
    let results = exec::map_items(exec, &jobs, |&(n, s)| {
        run_one(cfg, n, s, inner).map_err(|e| Error::InvalidSpec(format!("run n = {n}, seed = {s} failed: {e}")))
    });
    let rows = results.into_iter().collect::<Result<Vec<_>>>()?;

    let mut summary = Vec::new();
    for &n in &cfg.n_grid {
        let r: Vec<&HybridRow> = rows.iter().filter(|r| r.n == n).collect();
        let k = r.len() as f64;
        summary.push(NSummary {
            n,
            mean_err: r.iter().map(|r| r.err).sum::<f64>() / k,
            mean_pi: r.iter().map(|r| r.pi).sum::<f64>() / k,
            mean_ln_pi: r.iter().map(|r| r.pi.ln()).sum::<f64>() / k,
        });
    }
    let ns: Vec<f64> = summary.iter().map(|s| s.n as f64).collect();
    let errs: Vec<f64> = summary.iter().map(|s| s.mean_err).collect();
    let fit = log_log_fit(&ns, &errs)?;
    Ok(ExperimentResult { config: cfg.clone(), rows, summary, fit })
}
