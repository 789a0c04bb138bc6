use serde::{Deserialize, Serialize};

use super::{misfit, Field, InteriorTerms, RiskEvaluator, RiskKind, RiskSpec};
use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::network::{MlpParams, BLOCK};
use crate::problem::{rng_for, Stream};

/// Sample sizes and seed of a Monte Carlo validation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_boundary: usize,
    pub n_interior: usize,
    pub seed: u64,
}

/// Estimate with its standard error.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    /// Sample mean and standard error of the mean.
    pub fn from_samples(v: &[f64]) -> Estimate {
        let n = v.len();
        if n == 0 {
            return Estimate::default();
        }
        let mean = v.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Estimate { value: mean, se: 0.0 };
        }
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        Estimate { value: mean, se: (var / n as f64).sqrt() }
    }
}

/// Monte Carlo estimate of a theoretical risk, by term.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub total: f64,
    pub se: f64,
    /// Finite data sum (no sampling error).
    pub data: f64,
    pub boundary: Estimate,
    pub residual: Estimate,
    pub residual_per_op: Vec<f64>,
    pub sobolev: Estimate,
}

/// `λ_d/n Σ‖u(X_i) − Y_i‖² + λ_e E‖u(X^(e)) − h‖² + |Ω|⁻¹ Σ_k ∫ F_k(u)²`, plus
/// `λ_t |Ω|⁻¹ ∫ Σ_{|α| ≤ m+1} ‖∂^α u‖²` for [`RiskKind::Sobolev`]. The
/// ridge term never enters a theoretical risk.
pub fn theoretical_risk_mc(
    field: &dyn Field,
    spec: &RiskSpec,
    kind: RiskKind,
    mc: &McConfig,
    exec: Exec,
) -> Result<McEstimate> {
    spec.validate()?;
    let problem = &spec.problem;
    let (d1, d2) = (problem.d1(), problem.d2);
    if field.d1() != d1 || field.d2() != d2 {
        return Err(Error::Shape("field dimensions do not match the problem".into()));
    }
    let l = spec.lambdas;
    let mut out = McEstimate::default();

    let s = &spec.samples;
    if s.n() > 0 && l.d > 0.0 {
        let jets = field.jets(&s.data_x, 0, exec)?;
        let w = l.d / s.n() as f64;
        out.data = (0..s.n()).map(|p| misfit(&jets.coeffs[p], 1, &s.data_y[p * d2..(p + 1) * d2], w, None)).sum();
    }

    if l.e > 0.0 && !problem.faces.is_empty() {
        if mc.n_boundary == 0 {
            return Err(Error::InvalidSpec("Monte Carlo boundary count must be positive".into()));
        }
        let (pts, labels) = problem.sample_boundary(&mut rng_for(mc.seed, Stream::ValidationBoundary), mc.n_boundary)?;
        let h = problem.boundary_targets(&pts, &labels);
        let jets = field.jets(&pts, 0, exec)?;
        let v: Vec<f64> =
            (0..mc.n_boundary).map(|p| misfit(&jets.coeffs[p], 1, &h[p * d2..(p + 1) * d2], l.e, None)).collect();
        out.boundary = Estimate::from_samples(&v);
    }

    let interior = InteriorTerms::new(spec, spec.collocation_order(kind), kind == RiskKind::Sobolev)?;
    let n_ops = interior.n_ops();
    out.residual_per_op = vec![0.0; n_ops];
    let sobolev_on = kind == RiskKind::Sobolev && l.t > 0.0;
    let mut interior_se = 0.0;
    if n_ops > 0 || sobolev_on {
        if mc.n_interior == 0 {
            return Err(Error::InvalidSpec("Monte Carlo interior count must be positive".into()));
        }
        let pts = problem.domain.sample(&mut rng_for(mc.seed, Stream::ValidationInterior), mc.n_interior);
        let jets = field.jets(&pts, spec.collocation_order(kind), exec)?;
        let per_point: Vec<Vec<f64>> = exec::map_blocks(exec, mc.n_interior, BLOCK, |r| {
            r.map(|p| {
                let x = &pts[p * d1..(p + 1) * d1];
                let mut parts = vec![0.0; n_ops + 1];
                interior.point(&interior.coefficients(x), &jets.coeffs[p], 1.0, l.t, &mut parts, None);
                parts
            })
            .collect::<Vec<_>>()
        })
        .into_iter()
        .flatten()
        .collect();
        let col = |f: &dyn Fn(&[f64]) -> f64| -> Vec<f64> { per_point.iter().map(|v| f(v)).collect() };
        for (k, slot) in out.residual_per_op.iter_mut().enumerate() {
            *slot = Estimate::from_samples(&col(&|v| v[k])).value;
        }
        out.residual = Estimate::from_samples(&col(&|v| v[..n_ops].iter().sum()));
        out.sobolev = Estimate::from_samples(&col(&|v| v[n_ops]));
        interior_se = Estimate::from_samples(&col(&|v| v.iter().sum())).se;
    }

    out.total = out.data + out.boundary.value + out.residual.value + out.sobolev.value;
    out.se = (out.boundary.se.powi(2) + interior_se.powi(2)).sqrt();
    Ok(out)
}

/// `PI(u) = λ_e E‖u(X^(e)) − h‖² + |Ω|⁻¹ Σ_k ∫ F_k(u)²`.
pub fn physics_inconsistency(field: &dyn Field, spec: &RiskSpec, mc: &McConfig, exec: Exec) -> Result<Estimate> {
    let r = theoretical_risk_mc(field, spec, RiskKind::Empirical, mc, exec)?;
    Ok(Estimate {
        value: r.boundary.value + r.residual.value,
        se: (r.boundary.se.powi(2) + r.residual.se.powi(2)).sqrt(),
    })
}

/// `|R − ℛ|` between the training risk of `kind` and its Monte Carlo
/// theoretical counterpart, with the Monte Carlo standard error. For
/// [`RiskKind::Ridge`] this is `|R^(ridge) − ℛ_n|`.
pub fn overfitting_gap(params: &MlpParams, spec: &RiskSpec, kind: RiskKind, mc: &McConfig, exec: Exec) -> Result<Estimate> {
    let empirical = RiskEvaluator::new(spec, params.arch(), kind, exec)?.evaluate(params.theta(), false)?.0;
    let theoretical = theoretical_risk_mc(params, spec, kind, mc, exec)?;
    Ok(Estimate { value: (empirical.total - theoretical.total).abs(), se: theoretical.se })
}
