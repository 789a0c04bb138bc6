//! End-to-end studies: overfitting witnesses, the hybrid advection rate
//! experiment, a heat-equation solver run and the derivative-bound sweep.

mod bounds;
mod heat;
mod hybrid;
mod overfit;

pub use bounds::{bound_check, BoundCheckConfig, BoundCheckResult};
pub use heat::{run_pde_solver_heat, HeatSolveConfig, HeatSolveResult, HeatSolveSummary};
pub use hybrid::{advection_spec, run_hybrid_advection, ExperimentResult, HybridConfig, HybridRow, NSummary};
pub use overfit::{
    friction_problem, run_overfit_demo, GentleCheck, OverfitConfig, OverfitKind, OverfitResult, OverfitRow,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::problem::{rng_for, BoxDomain, Stream};
use crate::risk::{Estimate, Field};

/// Monte Carlo estimate of `|supp|⁻¹ ∫_supp ‖u − u*‖₂²` from `n_mc` uniform
/// points drawn from the metric stream of `seed`.
pub fn err_metric(u: &dyn Field, truth: &dyn Field, supp: &BoxDomain, n_mc: usize, seed: u64, exec: Exec) -> Result<Estimate> {
    if n_mc == 0 {
        return Err(Error::InvalidSpec("error metric needs at least one Monte Carlo point".into()));
    }
    supp.validate()?;
    if u.d1() != supp.dim() || truth.d1() != supp.dim() || u.d2() != truth.d2() {
        return Err(Error::Shape("error metric fields do not match the support".into()));
    }
    let pts = supp.sample(&mut rng_for(seed, Stream::Metric), n_mc);
    let a = u.jets(&pts, 0, exec)?;
    let b = truth.jets(&pts, 0, exec)?;
    let d2 = u.d2();
    let v: Vec<f64> = (0..n_mc)
        .map(|p| (0..d2).map(|i| (a.value(p, i) - b.value(p, i)).powi(2)).sum())
        .collect();
    Ok(Estimate::from_samples(&v))
}

/// Ordinary least-squares line `y ≈ slope·x + intercept`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
}

pub fn ols(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::InvalidSpec("least squares needs at least two paired points".into()));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidSpec("least squares needs distinct abscissae".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = x.iter().zip(y).map(|(a, b)| b - (slope * a + intercept)).collect();
    Ok(LinearFit { slope, intercept, residuals })
}

/// Fit of `ln y` against `ln x`.
pub fn log_log_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidSpec("log-log fit needs positive values".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    ols(&lx, &ly)
}

/// `count` values spaced evenly in log scale from `lo` to `hi`, rounded.
pub fn log_grid(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    if count < 2 {
        return vec![lo];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut v: Vec<usize> =
        (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp().round() as usize).collect();
    v.dedup();
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ols_recovers_line() {
        let f = ols(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-15 && (f.intercept - 1.0).abs() < 1e-15);
        assert!(ols(&[1.0, 1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn grid_endpoints() {
        let g = log_grid(10, 1000, 12);
        assert_eq!((g[0], *g.last().unwrap(), g.len()), (10, 1000, 12));
    }
}
