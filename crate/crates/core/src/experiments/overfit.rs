use serde::{Deserialize, Serialize};

use crate::constructions::{friction_network, heat_counterexample_network};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::network::MlpParams;
use crate::operators::{self, Expr};
use crate::problem::{heat_initial_condition, heat_problem, BoxDomain, Counts, Problem};
use crate::risk::{empirical_risk, theoretical_risk_mc, Lambdas, McConfig, RiskKind, RiskSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverfitKind {
    /// Damped motion `m u'' + γ u' = 0` fitted to noisy observations.
    Friction,
    /// Heat equation with the bell-shaped initial condition.
    Heat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverfitConfig {
    pub kind: OverfitKind,
    pub p_grid: Vec<f64>,
    pub mc: McConfig,
    /// Seed of the training sample.
    pub seed: u64,
    pub depth: usize,
    pub width: usize,
    /// Observations (friction only).
    pub n: usize,
    /// Boundary points (heat only).
    pub n_e: usize,
    pub n_r: usize,
    /// Observation noise standard deviation (friction only).
    pub sigma: f64,
    /// Time horizon (heat only).
    pub horizon: f64,
}

impl OverfitConfig {
    /// `m = γ = 1`, `σ = 0.1`, `n = n_r = 10`, one hidden layer.
    pub fn friction() -> Self {
        OverfitConfig {
            kind: OverfitKind::Friction,
            p_grid: vec![10.0, 1e2, 1e3, 1e4],
            mc: McConfig { n_boundary: 0, n_interior: 200_000, seed: 1 },
            seed: 0,
            depth: 1,
            width: 9,
            n: 10,
            n_e: 0,
            n_r: 10,
            sigma: 0.1,
            horizon: 1.0,
        }
    }

    /// Two hidden layers of width 4, `n_e = n_r = 100`, `T = 1`.
    pub fn heat() -> Self {
        OverfitConfig {
            kind: OverfitKind::Heat,
            p_grid: vec![10.0, 1e2, 1e3, 1e4],
            mc: McConfig { n_boundary: 200_000, n_interior: 200_000, seed: 1 },
            seed: 0,
            depth: 2,
            width: 4,
            n: 0,
            n_e: 100,
            n_r: 100,
            sigma: 0.0,
            horizon: 1.0,
        }
    }

    pub fn for_kind(kind: OverfitKind) -> Self {
        match kind {
            OverfitKind::Friction => Self::friction(),
            OverfitKind::Heat => Self::heat(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverfitRow {
    pub p: f64,
    pub empirical: f64,
    pub theoretical: f64,
    pub theoretical_se: f64,
    pub og: f64,
}

/// Empirical risk on a sample as large as the Monte Carlo one, against the
/// theoretical risk, for the smooth network `p = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GentleCheck {
    pub empirical: f64,
    pub theoretical: f64,
    /// Standard error of the difference of two independent estimates.
    pub se: f64,
    pub agree: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverfitResult {
    pub kind: OverfitKind,
    pub rows: Vec<OverfitRow>,
    /// Minimum gap among the abscissae (friction).
    pub delta: Option<f64>,
    /// Positive lower bound on the limiting theoretical risk (heat).
    pub floor: Option<f64>,
    pub gentle: GentleCheck,
}

/// Friction problem on `]0,1[` with ground truth `exp(−t)` and no boundary.
pub fn friction_problem(sigma: f64) -> Problem {
    Problem {
        domain: BoxDomain::unit(1),
        faces: Vec::new(),
        h: Vec::new(),
        u_star: Some(vec![Expr::parse("exp(-x0)").expect("valid")]),
        sigma,
        supp: None,
        d2: 1,
    }
}

fn spec_for(cfg: &OverfitConfig) -> Result<RiskSpec> {
    let (problem, operator, lambdas, counts) = match cfg.kind {
        OverfitKind::Friction => (
            friction_problem(cfg.sigma),
            operators::friction(1.0, 1.0),
            Lambdas { d: 1.0, e: 0.0, ridge: 0.0, t: 0.0 },
            Counts { n: cfg.n, n_e: 0, n_r: cfg.n_r },
        ),
        OverfitKind::Heat => (
            heat_problem(cfg.depth, cfg.horizon)?,
            operators::heat(),
            Lambdas { d: 0.0, e: 1.0, ridge: 0.0, t: 0.0 },
            Counts { n: 0, n_e: cfg.n_e, n_r: cfg.n_r },
        ),
    };
    let samples = problem.sample(counts, cfg.seed)?;
    Ok(RiskSpec { lambdas, m: 0, operators: vec![operator], problem, samples })
}

fn network(cfg: &OverfitConfig, spec: &RiskSpec, p: f64) -> Result<(MlpParams, Option<f64>)> {
    match cfg.kind {
        OverfitKind::Friction => {
            let s = &spec.samples;
            let data: Vec<(f64, f64)> = s.data_x.iter().copied().zip(s.data_y.iter().copied()).collect();
            let f = friction_network(&data, &s.collocation_x, p, cfg.depth, cfg.width)?;
            Ok((f.params, Some(f.delta)))
        }
        OverfitKind::Heat => Ok((heat_counterexample_network(p, cfg.depth, cfg.width)?, None)),
    }
}

/// `½ · |Ω|⁻¹ ∫ u₀² / (2T)`, half the limiting lower bound of the residual
/// energy of any function matching `u₀` at `t = 0` and vanishing for `t ≥ T`.
fn heat_floor(depth: usize, horizon: f64) -> Result<f64> {
    let u0 = heat_initial_condition(depth)?;
    let n = 20_000;
    let h = 2.0 / n as f64;
    let integral: f64 = (0..n).map(|i| u0.eval(&[-1.0 + (i as f64 + 0.5) * h]).powi(2) * h).sum();
    Ok(0.5 * integral / (2.0 * horizon) / (2.0 * horizon))
}

/// Evaluate the analytic constructions across `cfg.p_grid`.
pub fn run_overfit_demo(cfg: &OverfitConfig, exec: Exec) -> Result<OverfitResult> {
    if cfg.p_grid.is_empty() {
        return Err(Error::InvalidSpec("empty sharpness grid".into()));
    }
    let spec = spec_for(cfg)?;
    let mut rows = Vec::with_capacity(cfg.p_grid.len());
    let mut delta = None;
    for &p in &cfg.p_grid {
        let (net, d) = network(cfg, &spec, p)?;
        delta = d;
        let empirical = empirical_risk(&net, &spec)?.total;
        let th = theoretical_risk_mc(&net, &spec, RiskKind::Empirical, &cfg.mc, exec)?;
        rows.push(OverfitRow { p, empirical, theoretical: th.total, theoretical_se: th.se, og: (empirical - th.total).abs() });
    }

    let (net, _) = network(cfg, &spec, 1.0)?;
    let big = spec.problem.sample(
        Counts { n: 0, n_e: if spec.problem.faces.is_empty() { 0 } else { cfg.mc.n_boundary }, n_r: cfg.mc.n_interior },
        cfg.mc.seed.wrapping_add(1),
    )?;
    let mut large = spec.clone();
    large.samples.boundary_x = big.boundary_x;
    large.samples.boundary_face = big.boundary_face;
    large.samples.boundary_h = big.boundary_h;
    large.samples.collocation_x = big.collocation_x;
    let empirical = empirical_risk(&net, &large)?.total;
    let th = theoretical_risk_mc(&net, &spec, RiskKind::Empirical, &cfg.mc, exec)?;
    let se = std::f64::consts::SQRT_2 * th.se;
    let gentle = GentleCheck { empirical, theoretical: th.total, se, agree: (empirical - th.total).abs() <= 3.0 * se };

    let floor = match cfg.kind {
        OverfitKind::Heat => Some(heat_floor(cfg.depth, cfg.horizon)?),
        OverfitKind::Friction => None,
    };
    Ok(OverfitResult { kind: cfg.kind, rows, delta, floor, gentle })
}
