//! Batched jet evaluation and reverse pass for `f64` parameters.
//!
//! Points are processed in blocks of `B`. Inside a block every layer holds a
//! matrix with one row per neuron and `n_c · B` columns, column `c·B + p`
//! being jet entry `c` at point `p`. Affine layers then become single matrix
//! products and the bias only touches the first `B` columns.

use std::sync::Arc;

use matrixmultiply::dgemm;

use super::combinatorics::{eval_poly, tanh_deriv_poly};
use super::mlp::Arch;
use crate::autodiff::JetLayout;
use crate::error::{Error, Result};
use crate::exec::{self, Exec};

/// Points per block in batched evaluation.
pub const BLOCK: usize = 64;

/// Batched jet evaluator for one architecture and derivative order.
#[derive(Clone, Debug)]
pub struct Engine {
    arch: Arch,
    layout: Arc<JetLayout>,
    /// `P_k` for `k = 0..=K+1`.
    polys: Vec<Vec<f64>>,
    /// Faà di Bruno terms of all coefficients, flattened.
    terms: Vec<FlatTerm>,
    /// `terms[term_start[a]..term_start[a + 1]]` belong to coefficient `a`.
    term_start: Vec<usize>,
    /// Factor positions referenced by `terms`.
    factors: Vec<usize>,
}

#[derive(Clone, Copy, Debug)]
struct FlatTerm {
    order: usize,
    multiplicity: f64,
    start: usize,
    len: usize,
}

/// Output jets of a batch: `coeffs[p][i * n_c + c]` is entry `c` of output `i`
/// at point `p`.
#[derive(Clone, Debug)]
pub struct JetBatch {
    pub n_c: usize,
    pub d2: usize,
    pub coeffs: Vec<Vec<f64>>,
}

impl JetBatch {
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Entry `c` of output `i` at point `p`.
    pub fn get(&self, p: usize, i: usize, c: usize) -> f64 {
        self.coeffs[p][i * self.n_c + c]
    }

    pub fn value(&self, p: usize, i: usize) -> f64 {
        self.get(p, i, 0)
    }
}

struct Cache {
    b: usize,
    /// Activations per layer input, `acts[0]` being the coordinate jets.
    acts: Vec<Vec<f64>>,
    /// Pre-activation jets of each hidden layer.
    pre: Vec<Vec<f64>>,
    /// `tanh^(k)` of the pre-activation values, `K + 2` per neuron and point.
    derivs: Vec<Vec<f64>>,
    out: Vec<f64>,
}

impl Engine {
    pub fn new(arch: Arch, order: usize) -> Result<Self> {
        let layout = JetLayout::get(arch.d1, order)?;
        let polys = (0..=order + 1).map(tanh_deriv_poly).collect::<Result<_>>()?;
        let mut terms = Vec::new();
        let mut term_start = vec![0];
        let mut factors = Vec::new();
        for a in 0..layout.len() {
            for t in layout.fdb_terms(a) {
                terms.push(FlatTerm { order: t.order, multiplicity: t.multiplicity, start: factors.len(), len: t.factors.len() });
                factors.extend_from_slice(&t.factors);
            }
            term_start.push(terms.len());
        }
        Ok(Engine { arch, layout, polys, terms, term_start, factors })
    }

    pub fn arch(&self) -> Arch {
        self.arch
    }

    pub fn order(&self) -> usize {
        self.layout.order()
    }

    pub fn layout(&self) -> &Arc<JetLayout> {
        &self.layout
    }

    pub fn n_coeffs(&self) -> usize {
        self.layout.len()
    }

    fn check(&self, theta: &[f64], points: &[f64]) -> Result<usize> {
        if theta.len() != self.arch.num_params() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                self.arch.num_params(),
                theta.len()
            )));
        }
        if !points.len().is_multiple_of(self.arch.d1) {
            return Err(Error::Shape(format!("point buffer not a multiple of d1 = {}", self.arch.d1)));
        }
        Ok(points.len() / self.arch.d1)
    }

    /// Output jets at every point of the flat buffer `points` (row per point).
    pub fn evaluate(&self, theta: &[f64], points: &[f64], exec: Exec) -> Result<JetBatch> {
        let n = self.check(theta, points)?;
        let d1 = self.arch.d1;
        let blocks = exec::map_blocks(exec, n, BLOCK, |r| {
            let cache = self.forward_block(theta, &points[r.start * d1..r.end * d1]);
            self.unpack(&cache)
        });
        Ok(JetBatch { n_c: self.n_coeffs(), d2: self.arch.d2, coeffs: blocks.into_iter().flatten().collect() })
    }

    /// Accumulate per-point terms and, optionally, their gradient in `θ`.
    ///
    /// `term(p, jets, grad, parts)` receives the output jets of point `p` laid
    /// out as in [`JetBatch`], adds its contributions into `parts` (length
    /// `n_parts`) and, when `grad` is present, writes `∂(Σ parts)/∂jets` into
    /// it (zero-initialised). Block results are combined in block order, so
    /// the outcome does not depend on `exec`.
    pub fn accumulate<F>(
        &self,
        theta: &[f64],
        points: &[f64],
        exec: Exec,
        n_parts: usize,
        want_grad: bool,
        term: F,
    ) -> Result<(Vec<f64>, Option<Vec<f64>>)>
    where
        F: Fn(usize, &[f64], Option<&mut [f64]>, &mut [f64]) + Sync,
    {
        let n = self.check(theta, points)?;
        let d1 = self.arch.d1;
        let n_p = theta.len();
        let stride = self.arch.d2 * self.n_coeffs();
        let blocks = exec::map_blocks(exec, n, BLOCK, |r| {
            let cache = self.forward_block(theta, &points[r.start * d1..r.end * d1]);
            let jets = self.unpack(&cache);
            let mut parts = vec![0.0; n_parts];
            if !want_grad {
                for (p, j) in jets.iter().enumerate() {
                    term(r.start + p, j, None, &mut parts);
                }
                return (parts, None);
            }
            let mut d_jets = vec![0.0; stride * jets.len()];
            for (p, (j, g)) in jets.iter().zip(d_jets.chunks_mut(stride)).enumerate() {
                term(r.start + p, j, Some(g), &mut parts);
            }
            let mut grad = vec![0.0; n_p];
            self.backward_block(theta, &cache, &self.pack(&d_jets, cache.b), &mut grad);
            (parts, Some(grad))
        });
        let mut parts = vec![0.0; n_parts];
        let mut grad = want_grad.then(|| vec![0.0; n_p]);
        for (p, g) in blocks {
            for (a, b) in parts.iter_mut().zip(&p) {
                *a += b;
            }
            if let (Some(acc), Some(g)) = (grad.as_mut(), g) {
                for (a, b) in acc.iter_mut().zip(&g) {
                    *a += b;
                }
            }
        }
        Ok((parts, grad))
    }

    /// Sum of a scalar per-point loss and its gradient; see [`Engine::accumulate`].
    pub fn loss_and_grad<F>(&self, theta: &[f64], points: &[f64], exec: Exec, loss: F) -> Result<(f64, Vec<f64>)>
    where
        F: Fn(usize, &[f64], &mut [f64]) -> f64 + Sync,
    {
        let (parts, grad) = self.accumulate(theta, points, exec, 1, true, |p, j, g, parts| {
            parts[0] += loss(p, j, g.expect("gradient requested"));
        })?;
        Ok((parts[0], grad.expect("gradient requested")))
    }

    fn forward_block(&self, theta: &[f64], points: &[f64]) -> Cache {
        let arch = self.arch;
        let d1 = arch.d1;
        let b = points.len() / d1;
        let n_c = self.n_coeffs();
        let cols = n_c * b;

        let mut a0 = vec![0.0; d1 * cols];
        for i in 0..d1 {
            let row = &mut a0[i * cols..(i + 1) * cols];
            for p in 0..b {
                row[p] = points[p * d1 + i];
            }
            if let Some(u) = self.layout.unit(i) {
                row[u * b..(u + 1) * b].fill(1.0);
            }
        }

        let mut acts = vec![a0];
        let mut pre = Vec::with_capacity(arch.h);
        let mut derivs = Vec::with_capacity(arch.h);
        for k in 0..arch.num_layers() {
            let (n_in, n_out) = arch.layer_dims(k);
            let off = arch.layer_offset(k);
            let w = &theta[off..off + n_in * n_out];
            let bias = &theta[off + n_in * n_out..off + (n_in + 1) * n_out];
            let mut z = vec![0.0; n_out * cols];
            gemm(n_out, n_in, cols, w, (n_in, 1), acts.last().unwrap(), (cols, 1), &mut z, 0.0);
            for j in 0..n_out {
                for v in &mut z[j * cols..j * cols + b] {
                    *v += bias[j];
                }
            }
            if k + 1 < arch.num_layers() {
                let (a, g) = self.tanh_forward(&z, n_out, b);
                pre.push(z);
                derivs.push(g);
                acts.push(a);
            } else {
                return Cache { b, acts, pre, derivs, out: z };
            }
        }
        unreachable!("the output layer returns")
    }

    fn unpack(&self, cache: &Cache) -> Vec<Vec<f64>> {
        let (b, n_c, d2) = (cache.b, self.n_coeffs(), self.arch.d2);
        let cols = n_c * b;
        (0..b)
            .map(|p| {
                let mut v = Vec::with_capacity(d2 * n_c);
                for i in 0..d2 {
                    for c in 0..n_c {
                        v.push(cache.out[i * cols + c * b + p]);
                    }
                }
                v
            })
            .collect()
    }

    fn pack(&self, per_point: &[f64], b: usize) -> Vec<f64> {
        let (n_c, d2) = (self.n_coeffs(), self.arch.d2);
        let cols = n_c * b;
        let mut out = vec![0.0; d2 * cols];
        for p in 0..b {
            for i in 0..d2 {
                for c in 0..n_c {
                    out[i * cols + c * b + p] = per_point[(p * d2 + i) * n_c + c];
                }
            }
        }
        out
    }

    /// `g^(k)(z)` for `k = 0..=K+1`, `g = tanh`.
    fn tanh_derivs(&self, z: f64, out: &mut [f64]) {
        let t = z.tanh();
        out[0] = t;
        for (k, o) in out.iter_mut().enumerate().skip(1) {
            *o = eval_poly(&self.polys[k], t);
        }
    }

    fn terms_of(&self, a: usize) -> &[FlatTerm] {
        &self.terms[self.term_start[a]..self.term_start[a + 1]]
    }

    /// Tanh of every jet row, with the derivative values reused by the
    /// reverse pass.
    fn tanh_forward(&self, z: &[f64], rows: usize, b: usize) -> (Vec<f64>, Vec<f64>) {
        let n_c = self.n_coeffs();
        let n_g = self.order() + 2;
        let cols = n_c * b;
        let mut out = vec![0.0; z.len()];
        let mut derivs = vec![0.0; rows * b * n_g];
        let mut zc = vec![0.0; n_c];
        for j in 0..rows {
            let zr = &z[j * cols..(j + 1) * cols];
            let or = &mut out[j * cols..(j + 1) * cols];
            for p in 0..b {
                for c in 0..n_c {
                    zc[c] = zr[c * b + p];
                }
                let g = &mut derivs[(j * b + p) * n_g..(j * b + p + 1) * n_g];
                self.tanh_derivs(zc[0], g);
                for a in 0..n_c {
                    let mut s = 0.0;
                    for t in self.terms_of(a) {
                        let mut v = g[t.order] * t.multiplicity;
                        for &f in &self.factors[t.start..t.start + t.len] {
                            v *= zc[f];
                        }
                        s += v;
                    }
                    or[a * b + p] = s;
                }
            }
        }
        (out, derivs)
    }

    /// Pull adjoints of tanh-jet outputs back to the pre-activation jets.
    fn tanh_backward(&self, z: &[f64], derivs: &[f64], d_out: &[f64], rows: usize, b: usize) -> Vec<f64> {
        let n_c = self.n_coeffs();
        let n_g = self.order() + 2;
        let cols = n_c * b;
        let mut dz = vec![0.0; z.len()];
        let mut zc = vec![0.0; n_c];
        let mut dzc = vec![0.0; n_c];
        for j in 0..rows {
            let zr = &z[j * cols..(j + 1) * cols];
            let dr = &d_out[j * cols..(j + 1) * cols];
            for p in 0..b {
                for c in 0..n_c {
                    zc[c] = zr[c * b + p];
                }
                dzc.fill(0.0);
                let g = &derivs[(j * b + p) * n_g..(j * b + p + 1) * n_g];
                for a in 0..n_c {
                    let da = dr[a * b + p];
                    if da == 0.0 {
                        continue;
                    }
                    for t in self.terms_of(a) {
                        let m = da * t.multiplicity;
                        let fs = &self.factors[t.start..t.start + t.len];
                        let mut prod = 1.0;
                        for &f in fs {
                            prod *= zc[f];
                        }
                        dzc[0] += m * g[t.order + 1] * prod;
                        for (q, &f) in fs.iter().enumerate() {
                            let mut others = g[t.order];
                            for (r, &h) in fs.iter().enumerate() {
                                if r != q {
                                    others *= zc[h];
                                }
                            }
                            dzc[f] += m * others;
                        }
                    }
                }
                for c in 0..n_c {
                    dz[j * cols + c * b + p] = dzc[c];
                }
            }
        }
        dz
    }

    fn backward_block(&self, theta: &[f64], cache: &Cache, d_out: &[f64], grad: &mut [f64]) {
        let arch = self.arch;
        let b = cache.b;
        let cols = self.n_coeffs() * b;
        let mut dz = d_out.to_vec();
        for k in (0..arch.num_layers()).rev() {
            let (n_in, n_out) = arch.layer_dims(k);
            let off = arch.layer_offset(k);
            let a_in = &cache.acts[k];
            {
                let (gw, gb) = grad[off..off + (n_in + 1) * n_out].split_at_mut(n_in * n_out);
                // dW += dZ · Aᵀ
                gemm(n_out, cols, n_in, &dz, (cols, 1), a_in, (1, cols), gw, 1.0);
                for j in 0..n_out {
                    gb[j] += dz[j * cols..j * cols + b].iter().sum::<f64>();
                }
            }
            if k == 0 {
                break;
            }
            let w = &theta[off..off + n_in * n_out];
            let mut da = vec![0.0; n_in * cols];
            // dA = Wᵀ · dZ
            gemm(n_in, n_out, cols, w, (1, n_in), &dz, (cols, 1), &mut da, 0.0);
            dz = self.tanh_backward(&cache.pre[k - 1], &cache.derivs[k - 1], &da, n_in, b);
        }
    }
}

/// `C (m×n, row-major) = A·B + beta·C` with explicit strides for `A` and `B`.
#[allow(clippy::too_many_arguments)]
fn gemm(m: usize, k: usize, n: usize, a: &[f64], sa: (usize, usize), b: &[f64], sb: (usize, usize), c: &mut [f64], beta: f64) {
    debug_assert!(c.len() >= m * n);
    debug_assert!(m == 0 || k == 0 || a.len() > (m - 1) * sa.0 + (k - 1) * sa.1);
    debug_assert!(k == 0 || n == 0 || b.len() > (k - 1) * sb.0 + (n - 1) * sb.1);
    // SAFETY: the strides above address only elements inside `a`, `b` and `c`.
    unsafe {
        dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            sa.0 as isize,
            sa.1 as isize,
            b.as_ptr(),
            sb.0 as isize,
            sb.1 as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::MlpParams;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn batched_jets_match_scalar_jets() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let arch = Arch::new(2, 5, 2, 2).unwrap();
        let p = MlpParams::init(arch, &mut rng);
        let engine = Engine::new(arch, 3).unwrap();
        let pts: Vec<f64> = (0..2 * 150).map(|_| rng.random_range(-1.0..1.0)).collect();
        let batch = engine.evaluate(p.theta(), &pts, Exec::Sequential).unwrap();
        for q in 0..150 {
            let jets = p.forward_jet(&pts[2 * q..2 * q + 2], 3).unwrap();
            for (i, j) in jets.iter().enumerate() {
                for (c, &v) in j.coeffs().iter().enumerate() {
                    let e = batch.get(q, i, c);
                    assert!((e - v).abs() <= 1e-12 * (1.0 + v.abs()), "{e} vs {v}");
                }
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let arch = Arch::new(2, 3, 2, 1).unwrap();
        let p = MlpParams::init(arch, &mut rng);
        let engine = Engine::new(arch, 2).unwrap();
        let pts: Vec<f64> = (0..2 * 70).map(|_| rng.random_range(-1.0..1.0)).collect();
        let loss = |_: usize, j: &[f64], g: &mut [f64]| {
            // (u_xx + u_yy + u)^2 + u_x^2
            let r = j[3] + j[5] + j[0];
            g[3] = 2.0 * r;
            g[5] = 2.0 * r;
            g[0] = 2.0 * r;
            g[1] = 2.0 * j[1];
            r * r + j[1] * j[1]
        };
        let (_, grad) = engine.loss_and_grad(p.theta(), &pts, Exec::Sequential, loss).unwrap();
        let f = |th: &[f64]| engine.loss_and_grad(th, &pts, Exec::Sequential, loss).unwrap().0;
        for k in 0..p.num_params() {
            let h = 1e-5;
            let mut tp = p.theta().to_vec();
            tp[k] += h;
            let mut tm = p.theta().to_vec();
            tm[k] -= h;
            let fd = (f(&tp) - f(&tm)) / (2.0 * h);
            assert!((fd - grad[k]).abs() <= 1e-6 * (1.0 + fd.abs()), "param {k}: {fd} vs {}", grad[k]);
        }
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn threaded_gradient_is_bitwise_sequential() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let arch = Arch::new(2, 6, 2, 1).unwrap();
        let p = MlpParams::init(arch, &mut rng);
        let engine = Engine::new(arch, 2).unwrap();
        let pts: Vec<f64> = (0..2 * 700).map(|_| rng.random_range(-1.0..1.0)).collect();
        let loss = |_: usize, j: &[f64], g: &mut [f64]| {
            let r = j[3] + j[5] - j[0];
            g[3] = 2.0 * r;
            g[5] = 2.0 * r;
            g[0] = -2.0 * r;
            r * r
        };
        let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let (la, ga) = pool.install(|| engine.loss_and_grad(p.theta(), &pts, Exec::Parallel, loss)).unwrap();
        let (lb, gb) = engine.loss_and_grad(p.theta(), &pts, Exec::Sequential, loss).unwrap();
        assert_eq!(la.to_bits(), lb.to_bits());
        assert!(ga.iter().zip(&gb).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}
