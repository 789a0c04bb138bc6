use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{jet_variable, Jet, Scalar};
use crate::error::{Error, Result};

/// Shape of a tanh network with `h` hidden layers of width `d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arch {
    pub h: usize,
    pub d: usize,
    pub d1: usize,
    pub d2: usize,
}

impl Arch {
    pub fn new(h: usize, d: usize, d1: usize, d2: usize) -> Result<Self> {
        if h == 0 || d == 0 || d1 == 0 || d2 == 0 {
            return Err(Error::Shape(format!("invalid architecture h={h} d={d} d1={d1} d2={d2}")));
        }
        Ok(Arch { h, d, d1, d2 })
    }

    /// Layer widths `L_0 = d1, L_1 = ⋯ = L_H = D, L_{H+1} = d2`.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.d1];
        w.extend(std::iter::repeat_n(self.d, self.h));
        w.push(self.d2);
        w
    }

    pub fn num_layers(&self) -> usize {
        self.h + 1
    }

    /// `(in, out)` widths of affine layer `k` (0-based).
    pub fn layer_dims(&self, k: usize) -> (usize, usize) {
        let w = self.widths();
        (w[k], w[k + 1])
    }

    /// Offset of layer `k` in the flat parameter vector; weights come first
    /// (row-major, one row per output neuron), then the bias.
    pub fn layer_offset(&self, k: usize) -> usize {
        (0..k).map(|j| {
            let (i, o) = self.layer_dims(j);
            (i + 1) * o
        }).sum()
    }

    pub fn num_params(&self) -> usize {
        self.layer_offset(self.num_layers())
    }
}

/// Parameters `θ` of a tanh network, stored as one flat vector.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    arch: Arch,
    theta: Vec<f64>,
}

impl MlpParams {
    pub fn zeros(arch: Arch) -> Self {
        MlpParams { arch, theta: vec![0.0; arch.num_params()] }
    }

    pub fn from_theta(arch: Arch, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != arch.num_params() {
            return Err(Error::Shape(format!("expected {} parameters, got {}", arch.num_params(), theta.len())));
        }
        Ok(MlpParams { arch, theta })
    }

    /// Weights uniform on `±√(6/(L_in + L_out))`, biases zero.
    pub fn init<R: Rng + ?Sized>(arch: Arch, rng: &mut R) -> Self {
        let mut p = Self::zeros(arch);
        for k in 0..arch.num_layers() {
            let (i, o) = arch.layer_dims(k);
            let limit = (6.0 / (i + o) as f64).sqrt();
            for w in p.weights_mut(k) {
                *w = rng.random_range(-limit..=limit);
            }
        }
        p
    }

    pub fn arch(&self) -> Arch {
        self.arch
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    pub fn into_theta(self) -> Vec<f64> {
        self.theta
    }

    pub fn num_params(&self) -> usize {
        self.theta.len()
    }

    /// `‖θ‖₂`.
    pub fn param_norm(&self) -> f64 {
        self.theta.iter().map(|t| t * t).sum::<f64>().sqrt()
    }

    pub fn weights(&self, k: usize) -> &[f64] {
        let (i, o) = self.arch.layer_dims(k);
        let off = self.arch.layer_offset(k);
        &self.theta[off..off + i * o]
    }

    pub fn weights_mut(&mut self, k: usize) -> &mut [f64] {
        let (i, o) = self.arch.layer_dims(k);
        let off = self.arch.layer_offset(k);
        &mut self.theta[off..off + i * o]
    }

    pub fn bias(&self, k: usize) -> &[f64] {
        let (i, o) = self.arch.layer_dims(k);
        let off = self.arch.layer_offset(k) + i * o;
        &self.theta[off..off + o]
    }

    pub fn bias_mut(&mut self, k: usize) -> &mut [f64] {
        let (i, o) = self.arch.layer_dims(k);
        let off = self.arch.layer_offset(k) + i * o;
        &mut self.theta[off..off + o]
    }

    /// Plain evaluation `u_θ(x)`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.arch.d1 {
            return Err(Error::Shape(format!("input of length {} for d1 = {}", x.len(), self.arch.d1)));
        }
        let mut a = x.to_vec();
        for k in 0..self.arch.num_layers() {
            let (n_in, n_out) = self.arch.layer_dims(k);
            let w = self.weights(k);
            let b = self.bias(k);
            let mut z = Vec::with_capacity(n_out);
            for j in 0..n_out {
                let row = &w[j * n_in..(j + 1) * n_in];
                let mut acc = a[0] * row[0];
                for i in 1..n_in {
                    acc += a[i] * row[i];
                }
                let v = acc + b[j];
                z.push(if k + 1 < self.arch.num_layers() { v.tanh() } else { v });
            }
            a = z;
        }
        Ok(a)
    }

    /// Output jets `∂^α u_θ(x)`, `|α| ≤ order`, in `f64`.
    pub fn forward_jet(&self, x: &[f64], order: usize) -> Result<Vec<Jet<f64>>> {
        forward_jet(self.arch, &self.theta, x, order)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let layers = (0..self.arch.num_layers())
            .map(|k| {
                let (n_in, _) = self.arch.layer_dims(k);
                CheckpointLayer {
                    w: self.weights(k).chunks(n_in).map(|r| r.to_vec()).collect(),
                    b: self.bias(k).to_vec(),
                }
            })
            .collect();
        Checkpoint { h: self.arch.h, d: self.arch.d, d1: self.arch.d1, d2: self.arch.d2, layers }
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        let arch = Arch::new(c.h, c.d, c.d1, c.d2)?;
        if c.layers.len() != arch.num_layers() {
            return Err(Error::Shape(format!("checkpoint has {} layers, expected {}", c.layers.len(), arch.num_layers())));
        }
        let mut theta = Vec::with_capacity(arch.num_params());
        for (k, layer) in c.layers.iter().enumerate() {
            let (n_in, n_out) = arch.layer_dims(k);
            if layer.w.len() != n_out || layer.w.iter().any(|r| r.len() != n_in) || layer.b.len() != n_out {
                return Err(Error::Shape(format!("layer {k} does not match a {n_in} -> {n_out} map")));
            }
            theta.extend(layer.w.iter().flatten());
            theta.extend(&layer.b);
        }
        MlpParams::from_theta(arch, theta)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(&self.to_checkpoint())?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Self::from_checkpoint(&c)
    }
}

/// Serialized network: one entry per affine layer, `w[j]` holds the incoming
/// weights of output neuron `j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub h: usize,
    pub d: usize,
    pub d1: usize,
    pub d2: usize,
    pub layers: Vec<CheckpointLayer>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointLayer {
    pub w: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

/// Output jets of the network with parameters `theta` of any scalar type.
///
/// With tape-backed parameters the resulting coefficients stay connected to
/// the parameter leaves, so [`crate::autodiff::grad_params`] differentiates
/// through input derivatives.
pub fn forward_jet<S: Scalar>(arch: Arch, theta: &[S], x: &[f64], order: usize) -> Result<Vec<Jet<S>>> {
    if theta.len() != arch.num_params() {
        return Err(Error::Shape(format!("expected {} parameters, got {}", arch.num_params(), theta.len())));
    }
    if x.len() != arch.d1 {
        return Err(Error::Shape(format!("input of length {} for d1 = {}", x.len(), arch.d1)));
    }
    let seed = theta[0];
    let mut a: Vec<Jet<S>> =
        (0..arch.d1).map(|i| jet_variable(i, x, order).map(|j| j.lift(&seed))).collect::<Result<_>>()?;
    for k in 0..arch.num_layers() {
        let (n_in, n_out) = arch.layer_dims(k);
        let off = arch.layer_offset(k);
        let w = &theta[off..off + n_in * n_out];
        let b = &theta[off + n_in * n_out..off + (n_in + 1) * n_out];
        let mut next = Vec::with_capacity(n_out);
        for j in 0..n_out {
            let row = &w[j * n_in..(j + 1) * n_in];
            let mut acc = a[0].scale_by(row[0]);
            for i in 1..n_in {
                acc = acc.add(&a[i].scale_by(row[i]))?;
            }
            let z = acc.add_value(b[j]);
            next.push(if k + 1 < arch.num_layers() { z.tanh() } else { z });
        }
        a = next;
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parameter_count() {
        let a = Arch::new(2, 4, 3, 2).unwrap();
        assert_eq!(a.num_params(), 4 * 4 + 5 * 4 + 5 * 2);
        assert_eq!(a.widths(), vec![3, 4, 4, 2]);
    }

    #[test]
    fn zero_network_is_zero() {
        let p = MlpParams::zeros(Arch::new(2, 3, 2, 1).unwrap());
        let j = p.forward_jet(&[0.4, -0.1], 2).unwrap();
        assert!(j[0].coeffs().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn single_tanh_neuron() {
        let arch = Arch::new(1, 1, 1, 1).unwrap();
        let p = MlpParams::from_theta(arch, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        let j = p.forward_jet(&[0.0], 2).unwrap();
        assert_eq!(j[0].coeffs(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn order_zero_jet_matches_plain_forward_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = MlpParams::init(Arch::new(3, 5, 2, 2).unwrap(), &mut rng);
        let x = [0.3, -0.8];
        let plain = p.forward(&x).unwrap();
        let jets = p.forward_jet(&x, 0).unwrap();
        for (a, j) in plain.iter().zip(&jets) {
            assert_eq!(a.to_bits(), j.value().to_bits());
        }
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = MlpParams::init(Arch::new(2, 3, 2, 1).unwrap(), &mut rng);
        let text = serde_json::to_string(&p.to_checkpoint()).unwrap();
        let back: Checkpoint = serde_json::from_str(&text).unwrap();
        assert_eq!(MlpParams::from_checkpoint(&back).unwrap(), p);
    }
}
