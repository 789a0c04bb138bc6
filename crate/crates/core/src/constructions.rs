//! Closed-form networks: interpolating witnesses of overfitting, the heat
//! counterexample and the sharpening sequences whose limits leave the
//! network class.
//!
//! `tanh_p^{∘H}` denotes `H` applications of `z ↦ tanh(p z)`; the sharpness
//! sits in every hidden layer so that the limit is the sign function for every
//! depth. Unused neurons are dead (zero incoming and outgoing weights).

use crate::error::{Error, Result};
use crate::network::{Arch, MlpParams};

/// `tanh_p^{∘H}(z)`.
pub fn sharp_tanh(z: f64, p: f64, h: usize) -> f64 {
    (0..h).fold(z, |y, _| (p * y).tanh())
}

/// `tanh^{∘H}(z)`.
pub fn tanh_iter(z: f64, h: usize) -> f64 {
    (0..h).fold(z, |y, _| y.tanh())
}

fn check_sharpness(p: f64) -> Result<()> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::Construction(format!("sharpness must be positive, got {p}")));
    }
    Ok(())
}

fn check_width(needed: usize, width: usize) -> Result<()> {
    if width < needed {
        return Err(Error::Construction(format!("construction needs width {needed}, got {width}")));
    }
    Ok(())
}

/// Sets the diagonal of every hidden-to-hidden layer to `slope` on the first
/// `active` neurons.
fn pass_through(params: &mut MlpParams, active: usize, slope: f64) {
    let arch = params.arch();
    for k in 1..arch.h {
        let w = params.weights_mut(k);
        for j in 0..active {
            w[j * arch.d + j] = slope;
        }
    }
}

/// Interpolating network of a one-dimensional data set.
#[derive(Clone, Debug)]
pub struct FrictionNetwork {
    pub params: MlpParams,
    /// Minimum gap among the data and collocation abscissae.
    pub delta: f64,
    /// Data sorted by abscissa.
    pub sorted: Vec<(f64, f64)>,
}

impl FrictionNetwork {
    /// `Y_(1) + Σ_i (Y_(i+1) − Y_(i))/2 · [tanh_p^{∘H}(x − X_(i) − δ/2) + 1]`.
    pub fn closed_form(&self, x: f64, p: f64) -> f64 {
        let h = self.params.arch().h;
        let s = &self.sorted;
        s[0].1
            + s.windows(2)
                .map(|w| 0.5 * (w[1].1 - w[0].1) * (sharp_tanh(x - w[0].0 - 0.5 * self.delta, p, h) + 1.0))
                .sum::<f64>()
    }
}

/// Minimum pairwise distance among all `points`.
pub fn min_gap(points: &[f64]) -> f64 {
    let mut v = points.to_vec();
    v.sort_by(f64::total_cmp);
    v.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

/// Network with `h` hidden layers of width `width ≥ n − 1` that tends to the
/// data at every abscissa while all its derivatives vanish at the data and
/// collocation points as `p → ∞`.
pub fn friction_network(data: &[(f64, f64)], collocation: &[f64], p: f64, h: usize, width: usize) -> Result<FrictionNetwork> {
    check_sharpness(p)?;
    let n = data.len();
    if n < 2 {
        return Err(Error::Construction("interpolation needs at least two observations".into()));
    }
    check_width(n - 1, width)?;
    let mut sorted = data.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut all: Vec<f64> = sorted.iter().map(|d| d.0).collect();
    all.extend_from_slice(collocation);
    let delta = min_gap(&all);
    if !(delta > 0.0) {
        return Err(Error::Construction("duplicate abscissae: minimum gap is zero".into()));
    }
    let arch = Arch::new(h, width, 1, 1)?;
    let mut params = MlpParams::zeros(arch);
    for (i, &(x, _)) in sorted[..n - 1].iter().enumerate() {
        params.weights_mut(0)[i] = p;
        params.bias_mut(0)[i] = -p * (x + 0.5 * delta);
    }
    pass_through(&mut params, n - 1, p);
    let mut offset = sorted[0].1;
    for i in 0..n - 1 {
        let half = 0.5 * (sorted[i + 1].1 - sorted[i].1);
        params.weights_mut(h)[i] = half;
        offset += half;
    }
    params.bias_mut(h)[0] = offset;
    Ok(FrictionNetwork { params, delta, sorted })
}

/// `tanh^{∘H}(x+0.5+pt) − tanh^{∘H}(x−0.5+pt) + tanh^{∘H}(0.5+pt) − tanh^{∘H}(1.5+pt)`.
pub fn heat_counterexample(x: f64, t: f64, p: f64, h: usize) -> f64 {
    let g = |z: f64| tanh_iter(z + p * t, h);
    g(x + 0.5) - g(x - 0.5) + g(0.5) - g(1.5)
}

/// Network on `(x, t)` equal to the initial condition at `t = 0` and
/// collapsing to zero for `t > 0` as `p → ∞`.
pub fn heat_counterexample_network(p: f64, h: usize, width: usize) -> Result<MlpParams> {
    check_sharpness(p)?;
    check_width(4, width)?;
    let arch = Arch::new(h, width, 2, 1)?;
    let mut params = MlpParams::zeros(arch);
    let rows = [(1.0, 0.5), (1.0, -0.5), (0.0, 0.5), (0.0, 1.5)];
    for (j, &(wx, b)) in rows.iter().enumerate() {
        params.weights_mut(0)[2 * j] = wx;
        params.weights_mut(0)[2 * j + 1] = p;
        params.bias_mut(0)[j] = b;
    }
    pass_through(&mut params, 4, 1.0);
    params.weights_mut(h)[..4].copy_from_slice(&[1.0, -1.0, 1.0, -1.0]);
    Ok(params)
}

/// Largest admissible bump half-width `½ min_{i≠j} |(x_i − t_i) − (x_j − t_j)|`
/// for points given as `(t, x)`.
pub fn bump_delta_max(points: &[[f64; 2]]) -> f64 {
    let c: Vec<f64> = points.iter().map(|q| q[1] - q[0]).collect();
    0.5 * min_gap(&c)
}

/// `1 + Σ_i Y_i/2 · (tanh_p^{∘H}(x−t−c_i+δ) − tanh_p^{∘H}(x−t−c_i−δ))` with
/// `c_i = x_i − t_i`, at a point `(t, x)`.
pub fn advection_bumps_closed_form(points: &[[f64; 2]], values: &[f64], delta: f64, p: f64, h: usize, q: [f64; 2]) -> f64 {
    let z = q[1] - q[0];
    1.0 + points
        .iter()
        .zip(values)
        .map(|(pt, y)| {
            let c = pt[1] - pt[0];
            0.5 * y * (sharp_tanh(z - c + delta, p, h) - sharp_tanh(z - c - delta, p, h))
        })
        .sum::<f64>()
}

/// Bumps of half-width `delta` travelling along the characteristics through
/// the data. Inputs are ordered `(t, x)` as in the advection problem.
pub fn advection_bumps(points: &[[f64; 2]], values: &[f64], delta: f64, p: f64, h: usize, width: usize) -> Result<MlpParams> {
    check_sharpness(p)?;
    let n = points.len();
    if values.len() != n {
        return Err(Error::Construction("one value per data point required".into()));
    }
    check_width(2 * n, width)?;
    if !(delta > 0.0) || (n > 1 && delta > bump_delta_max(points)) {
        return Err(Error::Construction(format!(
            "half-width {delta} violates 0 < delta <= {}",
            bump_delta_max(points)
        )));
    }
    let arch = Arch::new(h, width, 2, 1)?;
    let mut params = MlpParams::zeros(arch);
    for (i, (pt, y)) in points.iter().zip(values).enumerate() {
        let c = pt[1] - pt[0];
        for (s, shift, out) in [(0, delta, 0.5 * y), (1, -delta, -0.5 * y)] {
            let j = 2 * i + s;
            params.weights_mut(0)[2 * j] = -p;
            params.weights_mut(0)[2 * j + 1] = p;
            params.bias_mut(0)[j] = p * (shift - c);
            params.weights_mut(h)[j] = out;
        }
    }
    pass_through(&mut params, 2 * n, p);
    params.bias_mut(h)[0] = 1.0;
    Ok(params)
}

/// `tanh(p · tanh^{∘(H−1)}(x))`.
pub fn sign_limit(x: f64, p: f64, h: usize) -> f64 {
    (p * tanh_iter(x, h - 1)).tanh()
}

/// Width-one chain `tanh_p ∘ tanh^{∘(H−1)}` tending to the sign function.
pub fn sign_limit_network(p: f64, h: usize) -> Result<MlpParams> {
    check_sharpness(p)?;
    let arch = Arch::new(h, 1, 1, 1)?;
    let mut params = MlpParams::zeros(arch);
    for k in 0..h {
        params.weights_mut(k)[0] = if k + 1 == h { p } else { 1.0 };
    }
    params.weights_mut(h)[0] = 1.0;
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn friction_interpolates_two_points() {
        let f = friction_network(&[(0.8, 1.0), (0.2, 0.0)], &[0.5], 1e3, 1, 1).unwrap();
        assert!(f.params.forward(&[0.2]).unwrap()[0].abs() < 1e-6);
        assert!((f.params.forward(&[0.8]).unwrap()[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn heat_matches_initial_condition() {
        let u0 = crate::problem::heat_initial_condition(2).unwrap();
        for p in [1.0, 1e3] {
            let net = heat_counterexample_network(p, 2, 6).unwrap();
            let v = net.forward(&[0.3, 0.0]).unwrap()[0];
            assert!((v - u0.eval(&[0.3])).abs() < 1e-15);
        }
    }

    #[test]
    fn sign_limit_is_odd() {
        let net = sign_limit_network(1e3, 3).unwrap();
        assert_eq!(net.forward(&[0.0]).unwrap()[0], 0.0);
        assert!(net.forward(&[0.5]).unwrap()[0] >= 0.999);
        assert!(net.forward(&[-0.5]).unwrap()[0] <= -0.999);
    }

    #[test]
    fn bump_condition_is_enforced() {
        let pts = [[0.1, 0.3], [0.2, 0.5]];
        assert!(advection_bumps(&pts, &[1.0, 2.0], 0.04, 10.0, 2, 4).is_ok());
        assert!(advection_bumps(&pts, &[1.0, 2.0], 0.06, 10.0, 2, 4).is_err());
    }
}
