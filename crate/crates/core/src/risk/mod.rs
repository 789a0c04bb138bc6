//! Empirical, ridge and Sobolev-regularized risks, their Monte Carlo
//! theoretical counterparts, physics inconsistency and the overfitting gap.
//!
//! Norms on `ℝ^{d2}` are plain Euclidean norms (no `1/d2` averaging); see
//! [`NORM_AVERAGING`].

mod field;
mod monte_carlo;
mod tape;

pub use field::{ClosedForm, Field};
pub use monte_carlo::{overfitting_gap, physics_inconsistency, theoretical_risk_mc, Estimate, McConfig, McEstimate};
pub use tape::risk_on_tape;

use serde::{Deserialize, Serialize};

use crate::autodiff::K_MAX;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::network::{Arch, Engine, MlpParams};
use crate::operators::{CompiledOperator, Operator};
use crate::problem::{Problem, SampleSet};

/// Whether squared output norms are divided by `d2`. The risks use the plain
/// Euclidean norm; for scalar outputs both conventions agree.
pub const NORM_AVERAGING: bool = false;

/// Trade-off weights of the risk terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lambdas {
    #[serde(default)]
    pub d: f64,
    #[serde(default)]
    pub e: f64,
    #[serde(default)]
    pub ridge: f64,
    #[serde(default)]
    pub t: f64,
}

/// Which regularization terms enter a risk.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RiskKind {
    /// Data, boundary and residual terms only.
    Empirical,
    /// Empirical risk plus `λ_ridge ‖θ‖₂²`.
    Ridge,
    /// Ridge risk plus the Sobolev penalty of order `m + 1`.
    Sobolev,
}

impl RiskKind {
    fn ridge(self) -> bool {
        self != RiskKind::Empirical
    }

    fn sobolev(self) -> bool {
        self == RiskKind::Sobolev
    }
}

/// Complete risk configuration.
#[derive(Clone, Debug)]
pub struct RiskSpec {
    pub lambdas: Lambdas,
    /// Sobolev order: the penalty covers `|α| ≤ m + 1`.
    pub m: usize,
    pub operators: Vec<Operator>,
    pub problem: Problem,
    pub samples: SampleSet,
}

impl RiskSpec {
    /// Highest derivative order among the operators.
    pub fn operator_order(&self) -> usize {
        self.operators.iter().map(Operator::order).max().unwrap_or(0)
    }

    /// Jet order needed at collocation points.
    pub fn collocation_order(&self, kind: RiskKind) -> usize {
        let sob = if kind.sobolev() && self.lambdas.t > 0.0 { self.m + 1 } else { 0 };
        self.operator_order().max(sob)
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.lambdas;
        for (name, v) in [("lambda_d", l.d), ("lambda_e", l.e), ("lambda_ridge", l.ridge), ("lambda_t", l.t)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidSpec(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        if l.d == 0.0 && l.e == 0.0 {
            return Err(Error::InvalidSpec("lambda_d and lambda_e cannot both vanish".into()));
        }
        self.problem.validate()?;
        let (d1, d2) = (self.problem.d1(), self.problem.d2);
        for op in &self.operators {
            if op.d1() != d1 || op.d2() != d2 {
                return Err(Error::InvalidSpec(format!(
                    "operator of dimensions ({}, {}) on a ({d1}, {d2}) problem",
                    op.d1(),
                    op.d2()
                )));
            }
        }
        if l.t > 0.0 {
            let need = (d1 / 2).max(self.operator_order());
            if self.m < need {
                return Err(Error::InvalidSpec(format!("Sobolev order m = {} below max(floor(d1/2), K) = {need}", self.m)));
            }
            if self.m + 1 > K_MAX {
                return Err(Error::OrderTooHigh { order: self.m + 1, max: K_MAX });
            }
        }
        let s = &self.samples;
        if s.d1 != d1 || s.d2 != d2 {
            return Err(Error::InvalidSpec("sample set dimensions do not match the problem".into()));
        }
        if s.n_r() == 0 && !self.operators.is_empty() {
            return Err(Error::InvalidSpec("operators given but no collocation points".into()));
        }
        Ok(())
    }
}

/// Value of a risk broken down by term.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub total: f64,
    pub data: f64,
    pub boundary: f64,
    pub residual: f64,
    pub residual_per_op: Vec<f64>,
    pub ridge: f64,
    pub sobolev: f64,
    pub n: usize,
    pub n_e: usize,
    pub n_r: usize,
}

impl RiskReport {
    fn finish(&mut self) {
        self.residual = self.residual_per_op.iter().sum();
        self.total = self.data + self.boundary + self.residual + self.ridge + self.sobolev;
    }
}

/// Per-point interior terms shared by the training risks and the Monte Carlo
/// estimates: squared operator residuals and the Sobolev penalty.
#[derive(Clone, Debug)]
pub(crate) struct InteriorTerms {
    ops: Vec<CompiledOperator>,
    /// Positions `i * n_c + c` of every `∂^α u_i`, `|α| ≤ m + 1`.
    sobolev_pos: Vec<usize>,
}

impl InteriorTerms {
    pub(crate) fn new(spec: &RiskSpec, order: usize, sobolev: bool) -> Result<Self> {
        let layout = crate::autodiff::JetLayout::get(spec.problem.d1(), order)?;
        let ops = spec.operators.iter().map(|op| op.compile(&layout)).collect::<Result<_>>()?;
        let mut sobolev_pos = Vec::new();
        if sobolev && spec.lambdas.t > 0.0 {
            for i in 0..spec.problem.d2 {
                for (c, alpha) in layout.indices().iter().enumerate() {
                    if alpha.order() as usize <= spec.m + 1 {
                        sobolev_pos.push(i * layout.len() + c);
                    }
                }
            }
        }
        Ok(InteriorTerms { ops, sobolev_pos })
    }

    pub(crate) fn n_ops(&self) -> usize {
        self.ops.len()
    }

    pub(crate) fn coefficients(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.ops.iter().map(|o| o.coefficients(x)).collect()
    }

    /// Adds `w_res · F_k²` to `parts[k]` and `w_sob · Σ (∂^α u_i)²` to
    /// `parts[n_ops]`; with `grad`, accumulates the matching derivatives.
    pub(crate) fn point(
        &self,
        phi: &[Vec<f64>],
        jets: &[f64],
        w_res: f64,
        w_sob: f64,
        parts: &mut [f64],
        mut grad: Option<&mut [f64]>,
    ) {
        for (k, op) in self.ops.iter().enumerate() {
            let r = op.residual(&phi[k], jets);
            parts[k] += w_res * r * r;
            if let Some(g) = grad.as_deref_mut() {
                op.add_residual_grad(&phi[k], jets, 2.0 * w_res * r, g);
            }
        }
        let mut s = 0.0;
        for &p in &self.sobolev_pos {
            s += jets[p] * jets[p];
            if let Some(g) = grad.as_deref_mut() {
                g[p] += 2.0 * w_sob * jets[p];
            }
        }
        parts[self.ops.len()] += w_sob * s;
    }
}

/// `w · ‖u − y‖²` for a point whose value jets sit at stride `n_c`.
fn misfit(jets: &[f64], n_c: usize, y: &[f64], w: f64, grad: Option<&mut [f64]>) -> f64 {
    let mut s = 0.0;
    let mut g = grad;
    for (i, yi) in y.iter().enumerate() {
        let r = jets[i * n_c] - yi;
        s += r * r;
        if let Some(g) = g.as_deref_mut() {
            g[i * n_c] += 2.0 * w * r;
        }
    }
    w * s
}

/// Risk evaluation for one architecture with precomputed point data.
pub struct RiskEvaluator<'a> {
    spec: &'a RiskSpec,
    kind: RiskKind,
    value_engine: Engine,
    interior_engine: Engine,
    interior: InteriorTerms,
    /// `phi[p][k]` coefficient values of operator `k` at collocation point `p`.
    phi: Vec<Vec<Vec<f64>>>,
    exec: Exec,
}

impl<'a> RiskEvaluator<'a> {
    pub fn new(spec: &'a RiskSpec, arch: Arch, kind: RiskKind, exec: Exec) -> Result<Self> {
        spec.validate()?;
        if arch.d1 != spec.problem.d1() || arch.d2 != spec.problem.d2 {
            return Err(Error::Shape("network dimensions do not match the problem".into()));
        }
        let order = spec.collocation_order(kind);
        let interior = InteriorTerms::new(spec, order, kind.sobolev())?;
        let phi = spec.samples.collocation_x.chunks(arch.d1).map(|x| interior.coefficients(x)).collect();
        Ok(RiskEvaluator {
            spec,
            kind,
            value_engine: Engine::new(arch, 0)?,
            interior_engine: Engine::new(arch, order)?,
            interior,
            phi,
            exec,
        })
    }

    pub fn kind(&self) -> RiskKind {
        self.kind
    }

    /// Risk value and, if `want_grad`, its gradient in `θ`.
    pub fn evaluate(&self, theta: &[f64], want_grad: bool) -> Result<(RiskReport, Option<Vec<f64>>)> {
        let spec = self.spec;
        let s = &spec.samples;
        let l = spec.lambdas;
        let d2 = spec.problem.d2;
        let mut report = RiskReport { n: s.n(), n_e: s.n_e(), n_r: s.n_r(), ..Default::default() };
        let mut grad = want_grad.then(|| vec![0.0; theta.len()]);
        let mut add_grad = |g: Option<Vec<f64>>| {
            if let (Some(acc), Some(g)) = (grad.as_mut(), g) {
                for (a, b) in acc.iter_mut().zip(&g) {
                    *a += b;
                }
            }
        };

        if s.n() > 0 && l.d > 0.0 {
            let w = l.d / s.n() as f64;
            let (parts, g) = self.value_engine.accumulate(theta, &s.data_x, self.exec, 1, want_grad, |p, j, g, parts| {
                parts[0] += misfit(j, 1, &s.data_y[p * d2..(p + 1) * d2], w, g);
            })?;
            report.data = parts[0];
            add_grad(g);
        }
        if s.n_e() > 0 && l.e > 0.0 {
            let w = l.e / s.n_e() as f64;
            let (parts, g) =
                self.value_engine.accumulate(theta, &s.boundary_x, self.exec, 1, want_grad, |p, j, g, parts| {
                    parts[0] += misfit(j, 1, &s.boundary_h[p * d2..(p + 1) * d2], w, g);
                })?;
            report.boundary = parts[0];
            add_grad(g);
        }
        let n_ops = self.interior.n_ops();
        report.residual_per_op = vec![0.0; n_ops];
        if s.n_r() > 0 && (n_ops > 0 || self.kind.sobolev() && l.t > 0.0) {
            let w_res = 1.0 / s.n_r() as f64;
            let w_sob = l.t / s.n_r() as f64;
            let (parts, g) = self.interior_engine.accumulate(
                theta,
                &s.collocation_x,
                self.exec,
                n_ops + 1,
                want_grad,
                |p, j, g, parts| self.interior.point(&self.phi[p], j, w_res, w_sob, parts, g),
            )?;
            report.residual_per_op.copy_from_slice(&parts[..n_ops]);
            report.sobolev = parts[n_ops];
            add_grad(g);
        }
        if self.kind.ridge() {
            report.ridge = l.ridge * theta.iter().map(|t| t * t).sum::<f64>();
            if let Some(g) = grad.as_mut() {
                for (a, t) in g.iter_mut().zip(theta) {
                    *a += 2.0 * l.ridge * t;
                }
            }
        }
        report.finish();
        Ok((report, grad))
    }
}

fn report_for(params: &MlpParams, spec: &RiskSpec, kind: RiskKind) -> Result<RiskReport> {
    let ev = RiskEvaluator::new(spec, params.arch(), kind, Exec::default())?;
    Ok(ev.evaluate(params.theta(), false)?.0)
}

/// Data, boundary and residual terms at the training points.
pub fn empirical_risk(params: &MlpParams, spec: &RiskSpec) -> Result<RiskReport> {
    report_for(params, spec, RiskKind::Empirical)
}

/// Empirical risk plus `λ_ridge ‖θ‖₂²`.
pub fn ridge_risk(params: &MlpParams, spec: &RiskSpec) -> Result<RiskReport> {
    report_for(params, spec, RiskKind::Ridge)
}

/// Ridge risk plus `(λ_t / n_r) Σ_ℓ Σ_{|α| ≤ m+1} ‖∂^α u(X_ℓ)‖²`.
pub fn sobolev_risk(params: &MlpParams, spec: &RiskSpec) -> Result<RiskReport> {
    report_for(params, spec, RiskKind::Sobolev)
}
