//! Full-batch gradient descent on the regularized risks and the
//! theorem-prescribed hyperparameter schedules.

use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::network::MlpParams;
use crate::risk::{theoretical_risk_mc, Estimate, Lambdas, McConfig, RiskEvaluator, RiskKind, RiskReport, RiskSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    /// Plain gradient descent `θ ← θ − η ∇R`.
    Gd,
    /// Adaptive moments with `β₁ = 0.9`, `β₂ = 0.999`, `ε = 1e−8`.
    Adam,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_optimizer")]
    pub optimizer: Optimizer,
    #[serde(default = "default_monitor")]
    pub monitor_every: usize,
    #[serde(default = "default_kind")]
    pub kind: RiskKind,
    /// Fresh sample used to report the overfitting gap at monitor steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<McConfig>,
}

fn default_lr() -> f64 {
    1e-3
}

fn default_optimizer() -> Optimizer {
    Optimizer::Adam
}

fn default_monitor() -> usize {
    100
}

fn default_kind() -> RiskKind {
    RiskKind::Sobolev
}

impl TrainConfig {
    pub fn new(epochs: usize) -> Self {
        TrainConfig {
            epochs,
            lr: default_lr(),
            optimizer: default_optimizer(),
            monitor_every: default_monitor(),
            kind: default_kind(),
            validation: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidSpec("epochs must be positive".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidSpec("learning rate must be positive".into()));
        }
        if self.monitor_every == 0 {
            return Err(Error::InvalidSpec("monitor_every must be positive".into()));
        }
        Ok(())
    }
}

/// One logged step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonitorRow {
    pub step: usize,
    pub report: RiskReport,
    pub og: Option<Estimate>,
}

#[derive(Clone, Debug)]
pub struct TrainResult {
    /// Parameters with the lowest risk seen.
    pub best: MlpParams,
    pub best_step: usize,
    pub best_report: RiskReport,
    pub last: MlpParams,
    pub history: Vec<MonitorRow>,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Adam { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    fn step(&mut self, theta: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for (((th, g), m), v) in theta.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = Self::B1 * *m + (1.0 - Self::B1) * g;
            *v = Self::B2 * *v + (1.0 - Self::B2) * g * g;
            *th -= lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
        }
    }
}

/// Minimize the risk of `cfg.kind` from `init`.
///
/// Every step evaluates the risk at the current iterate; the best-so-far
/// iterate is returned. Rows are logged at step 0, every `monitor_every`
/// steps and at the final step.
pub fn train(init: &MlpParams, spec: &RiskSpec, cfg: &TrainConfig, exec: Exec) -> Result<TrainResult> {
    cfg.validate()?;
    let arch = init.arch();
    let eval = RiskEvaluator::new(spec, arch, cfg.kind, exec)?;
    let mut theta = init.theta().to_vec();
    let mut adam = Adam::new(theta.len());
    let mut best: Option<(f64, Vec<f64>, usize, RiskReport)> = None;
    let mut history = Vec::new();

    for step in 0..=cfg.epochs {
        let last = step == cfg.epochs;
        let (report, grad) = eval.evaluate(&theta, !last)?;
        if !report.total.is_finite() || grad.as_ref().is_some_and(|g| g.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite { step });
        }
        if best.as_ref().is_none_or(|b| report.total < b.0) {
            best = Some((report.total, theta.clone(), step, report.clone()));
        }
        if step % cfg.monitor_every == 0 || last {
            let og = match &cfg.validation {
                Some(mc) => {
                    let p = MlpParams::from_theta(arch, theta.clone())?;
                    let th = theoretical_risk_mc(&p, spec, cfg.kind, mc, exec)?;
                    Some(Estimate { value: (report.total - th.total).abs(), se: th.se })
                }
                None => None,
            };
            history.push(MonitorRow { step, report: report.clone(), og });
        }
        if let Some(g) = grad {
            match cfg.optimizer {
                Optimizer::Gd => {
                    for (t, g) in theta.iter_mut().zip(&g) {
                        *t -= cfg.lr * g;
                    }
                }
                Optimizer::Adam => adam.step(&mut theta, &g, cfg.lr),
            }
        }
    }
    let (_, best_theta, best_step, best_report) = best.expect("at least one evaluation");
    Ok(TrainResult {
        best: MlpParams::from_theta(arch, best_theta)?,
        best_step,
        best_report,
        last: MlpParams::from_theta(arch, theta)?,
        history,
    })
}

/// Column header of `metrics.csv`.
pub const METRICS_HEADER: &str = "step,total,data,boundary,residual,ridge,sobolev,og,og_se";

/// One `metrics.csv` line (without newline). Floats use the shortest
/// representation that round-trips.
pub fn metrics_line(row: &MonitorRow) -> String {
    let r = &row.report;
    let (og, og_se) = match row.og {
        Some(e) => (e.value.to_string(), e.se.to_string()),
        None => (String::new(), String::new()),
    };
    format!("{},{},{},{},{},{},{},{},{}", row.step, r.total, r.data, r.boundary, r.residual, r.ridge, r.sobolev, og, og_se)
}

pub fn write_metrics(path: &Path, rows: &[MonitorRow]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{METRICS_HEADER}")?;
    for r in rows {
        writeln!(f, "{}", metrics_line(r))?;
    }
    f.flush()?;
    Ok(())
}

/// Exact positive rational number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rational {
    pub num: u64,
    pub den: u64,
}

impl Rational {
    pub fn new(num: u64, den: u64) -> Self {
        let g = gcd(num, den).max(1);
        Rational { num: num / g, den: den / g }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Ridge exponent `κ = 1 / (12 + 4H(1 + (2 + H) max_deg))`.
pub fn kappa(h: usize, max_deg: usize) -> Result<Rational> {
    if h == 0 || max_deg == 0 {
        return Err(Error::InvalidSpec("kappa needs H >= 1 and max_deg >= 1".into()));
    }
    let (h, d) = (h as u64, max_deg as u64);
    Ok(Rational::new(1, 12 + 4 * h * (1 + (2 + h) * d)))
}

/// Source of the risk weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    /// Weights taken verbatim from the configuration.
    Manual,
    /// `λ_ridge = min(n_e, n_r)^{−κ}` with `max_deg` the largest operator degree.
    Thm41,
    /// `λ_ridge = min(n_e, n_r)^{−κ}` with `max_deg = m + 2`.
    Thm54,
    /// `λ_e = 1`, `λ_t = 1/ln n`, `λ_d = √n / ln n`, ridge as in `Thm54`.
    Prop58,
}

/// Hyperparameter schedule; `ridge_kappa` overrides the theorem's exponent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub kind: ScheduleKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ridge_kappa: Option<Rational>,
}

impl Schedule {
    pub fn manual() -> Self {
        Schedule { kind: ScheduleKind::Manual, ridge_kappa: None }
    }

    /// The exponent `κ` in force, if the schedule sets the ridge weight.
    pub fn kappa(&self, h: usize, max_op_degree: usize, m: usize) -> Result<Option<Rational>> {
        if let Some(k) = self.ridge_kappa {
            return Ok(Some(k));
        }
        match self.kind {
            ScheduleKind::Manual => Ok(None),
            ScheduleKind::Thm41 => kappa(h, max_op_degree).map(Some),
            ScheduleKind::Thm54 | ScheduleKind::Prop58 => kappa(h, m + 2).map(Some),
        }
    }

    /// Risk weights for `n` observations and `n_e`, `n_r` boundary and
    /// collocation points, starting from the manual weights `base`.
    #[allow(clippy::too_many_arguments)]
    pub fn lambdas(
        &self,
        base: Lambdas,
        h: usize,
        max_op_degree: usize,
        m: usize,
        n: usize,
        n_e: usize,
        n_r: usize,
    ) -> Result<Lambdas> {
        let mut l = base;
        if let Some(k) = self.kappa(h, max_op_degree, m)? {
            let c = n_e.min(n_r);
            if c == 0 {
                return Err(Error::InvalidSpec("ridge schedule needs n_e, n_r > 0".into()));
            }
            l.ridge = (c as f64).powf(-k.to_f64());
        }
        if self.kind == ScheduleKind::Prop58 {
            if n < 2 {
                return Err(Error::InvalidSpec("the observation schedule needs n >= 2".into()));
            }
            let ln = (n as f64).ln();
            l.e = 1.0;
            l.t = 1.0 / ln;
            l.d = (n as f64).sqrt() / ln;
        }
        Ok(l)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_values() {
        assert_eq!(kappa(2, 3).unwrap(), Rational::new(1, 116));
        assert_eq!(kappa(1, 1).unwrap(), Rational::new(1, 28));
        assert!(kappa(0, 1).is_err());
    }

    #[test]
    fn observation_schedule() {
        let s = Schedule { kind: ScheduleKind::Prop58, ridge_kappa: Some(Rational::new(1, 2)) };
        let l = s.lambdas(Lambdas { d: 0.0, e: 0.0, ridge: 0.0, t: 0.0 }, 2, 2, 1, 100, 400, 2500).unwrap();
        assert_eq!(l.e, 1.0);
        assert!((l.t - 1.0 / 100f64.ln()).abs() < 1e-15);
        assert!((l.d - 10.0 / 100f64.ln()).abs() < 1e-15);
        assert!((l.ridge - 0.05).abs() < 1e-15);
    }
}
