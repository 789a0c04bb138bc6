use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;

use super::multi_index::{multi_indices, MultiIndex};
use super::partitions::set_partitions;
use super::scalar::Scalar;
use crate::error::{Error, Result};
use crate::network::tanh_deriv_poly;

/// Highest derivative order a jet may carry.
pub const K_MAX: usize = 4;

/// One grouped term of the multivariate Faà di Bruno formula for a fixed `α`:
/// `multiplicity · g^(order)(f) · Π_{j} ∂^{factors[j]} f`, with factors given
/// as positions in the jet layout.
#[derive(Clone, Debug, PartialEq)]
pub struct FdbTerm {
    pub order: usize,
    pub factors: Vec<usize>,
    pub multiplicity: f64,
}

/// Index tables shared by every jet of a given dimension and order.
#[derive(Debug)]
pub struct JetLayout {
    dim: usize,
    order: usize,
    indices: Vec<MultiIndex>,
    lookup: HashMap<Vec<u32>, usize>,
    product: Vec<Vec<(usize, usize, f64)>>,
    fdb: Vec<Vec<FdbTerm>>,
}

type LayoutCache = Mutex<HashMap<(usize, usize), Arc<JetLayout>>>;

static LAYOUTS: Lazy<LayoutCache> = Lazy::new(Default::default);

impl JetLayout {
    /// Cached layout for `dim` inputs and derivatives up to `order`.
    pub fn get(dim: usize, order: usize) -> Result<Arc<JetLayout>> {
        if order > K_MAX {
            return Err(Error::OrderTooHigh { order, max: K_MAX });
        }
        if dim == 0 {
            return Err(Error::Shape("jet dimension must be positive".into()));
        }
        let mut cache = LAYOUTS.lock().expect("jet layout cache poisoned");
        Ok(cache
            .entry((dim, order))
            .or_insert_with(|| Arc::new(JetLayout::build(dim, order)))
            .clone())
    }

    fn build(dim: usize, order: usize) -> JetLayout {
        let indices = multi_indices(dim, order);
        let lookup: HashMap<Vec<u32>, usize> =
            indices.iter().enumerate().map(|(i, m)| (m.exponents().to_vec(), i)).collect();

        let product = indices
            .iter()
            .map(|alpha| {
                indices
                    .iter()
                    .enumerate()
                    .filter(|(_, beta)| beta.is_below(alpha))
                    .map(|(b, beta)| {
                        let rest = alpha.checked_sub(beta).expect("beta <= alpha");
                        (b, lookup[rest.exponents()], alpha.binomial(beta))
                    })
                    .collect()
            })
            .collect();

        let partitions: Vec<_> = (0..=order).map(set_partitions).collect();
        let fdb = indices
            .iter()
            .map(|alpha| {
                // one slot per unit derivative making up α
                let slots: Vec<usize> = alpha
                    .exponents()
                    .iter()
                    .enumerate()
                    .flat_map(|(c, &e)| std::iter::repeat_n(c, e as usize))
                    .collect();
                let mut grouped: BTreeMap<(usize, Vec<usize>), f64> = BTreeMap::new();
                for p in &partitions[slots.len()] {
                    let mut factors: Vec<usize> = p
                        .iter()
                        .map(|block| {
                            let mut e = vec![0u32; dim];
                            for &s in block {
                                e[slots[s]] += 1;
                            }
                            lookup[&e]
                        })
                        .collect();
                    factors.sort_unstable();
                    *grouped.entry((p.len(), factors)).or_insert(0.0) += 1.0;
                }
                grouped
                    .into_iter()
                    .map(|((order, factors), multiplicity)| FdbTerm { order, factors, multiplicity })
                    .collect()
            })
            .collect();

        JetLayout { dim, order, indices, lookup, product, fdb }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn index_of(&self, exponents: &[u32]) -> Option<usize> {
        self.lookup.get(exponents).copied()
    }

    /// Position of the unit index `e_i`, if the layout has order ≥ 1.
    pub fn unit(&self, i: usize) -> Option<usize> {
        if i >= self.dim || self.order == 0 {
            return None;
        }
        Some(1 + i)
    }

    /// Leibniz table for entry `a`: `(β, α−β, binom(α, β))` triples.
    pub fn product_terms(&self, a: usize) -> &[(usize, usize, f64)] {
        &self.product[a]
    }

    /// Grouped Faà di Bruno terms for entry `a`.
    pub fn fdb_terms(&self, a: usize) -> &[FdbTerm] {
        &self.fdb[a]
    }
}

/// All partial derivatives `∂^α u(x)` with `|α| ≤ K` of one scalar quantity.
#[derive(Clone, Debug)]
pub struct Jet<S> {
    layout: Arc<JetLayout>,
    point: Arc<[f64]>,
    coeffs: Vec<S>,
}

/// Jet of the coordinate function `x ↦ x_i` at `x`.
pub fn jet_variable(i: usize, x: &[f64], order: usize) -> Result<Jet<f64>> {
    if i >= x.len() {
        return Err(Error::IndexOutOfRange { index: i, dim: x.len() });
    }
    let layout = JetLayout::get(x.len(), order)?;
    let mut coeffs = vec![0.0; layout.len()];
    coeffs[0] = x[i];
    if let Some(u) = layout.unit(i) {
        coeffs[u] = 1.0;
    }
    Ok(Jet { layout, point: x.into(), coeffs })
}

impl Jet<f64> {
    /// Jet of a constant function.
    pub fn constant(c: f64, x: &[f64], order: usize) -> Result<Jet<f64>> {
        let layout = JetLayout::get(x.len(), order)?;
        let mut coeffs = vec![0.0; layout.len()];
        coeffs[0] = c;
        Ok(Jet { layout, point: x.into(), coeffs })
    }

    /// Embed into another scalar type via `seed.lift`.
    pub fn lift<T: Scalar>(&self, seed: &T) -> Jet<T> {
        self.map(|&c| seed.lift(c))
    }

    pub fn exp(&self) -> Jet<f64> {
        let e = self.coeffs[0].exp();
        self.compose(&vec![e; self.order() + 1]).expect("derivative count matches order")
    }

    pub fn sin(&self) -> Jet<f64> {
        let (s, c) = self.coeffs[0].sin_cos();
        let cycle = [s, c, -s, -c];
        let d: Vec<f64> = (0..=self.order()).map(|k| cycle[k % 4]).collect();
        self.compose(&d).expect("derivative count matches order")
    }

    pub fn cos(&self) -> Jet<f64> {
        let (s, c) = self.coeffs[0].sin_cos();
        let cycle = [c, -s, -c, s];
        let d: Vec<f64> = (0..=self.order()).map(|k| cycle[k % 4]).collect();
        self.compose(&d).expect("derivative count matches order")
    }

    /// `1 / f`; derivatives of `y ↦ 1/y` are `(−1)^k k! / y^{k+1}`.
    pub fn recip(&self) -> Jet<f64> {
        let y = self.coeffs[0];
        let mut d = Vec::with_capacity(self.order() + 1);
        let mut term = 1.0 / y;
        for k in 0..=self.order() {
            d.push(term);
            term *= -((k + 1) as f64) / y;
        }
        self.compose(&d).expect("derivative count matches order")
    }

    /// Integer power through repeated products.
    pub fn powi(&self, n: u32) -> Jet<f64> {
        let mut acc = self.constant_like(1.0);
        for _ in 0..n {
            acc = acc.mul(self).expect("same layout");
        }
        acc
    }
}

impl<S: Scalar> Jet<S> {
    pub fn from_parts(layout: Arc<JetLayout>, point: Arc<[f64]>, coeffs: Vec<S>) -> Result<Self> {
        if coeffs.len() != layout.len() || point.len() != layout.dim() {
            return Err(Error::Shape(format!(
                "jet expects {} coefficients at a {}-dimensional point",
                layout.len(),
                layout.dim()
            )));
        }
        Ok(Jet { layout, point, coeffs })
    }

    pub fn layout(&self) -> &Arc<JetLayout> {
        &self.layout
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn order(&self) -> usize {
        self.layout.order()
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<S> {
        self.coeffs
    }

    pub fn value(&self) -> S {
        self.coeffs[0]
    }

    /// `∂^α u` for the given exponents.
    pub fn get(&self, alpha: &[u32]) -> Result<S> {
        match self.layout.index_of(alpha) {
            Some(i) => Ok(self.coeffs[i]),
            None => Err(Error::MissingDerivative { alpha: alpha.to_vec(), order: self.order() }),
        }
    }

    pub fn map<T, F: FnMut(&S) -> T>(&self, f: F) -> Jet<T> {
        Jet { layout: self.layout.clone(), point: self.point.clone(), coeffs: self.coeffs.iter().map(f).collect() }
    }

    /// Constant jet on the same layout and scalar context.
    pub fn constant_like(&self, c: f64) -> Jet<S> {
        let zero = self.coeffs[0].lift(0.0);
        let mut coeffs = vec![zero; self.coeffs.len()];
        coeffs[0] = self.coeffs[0].lift(c);
        Jet { layout: self.layout.clone(), point: self.point.clone(), coeffs }
    }

    fn check(&self, other: &Jet<S>) -> Result<()> {
        if !Arc::ptr_eq(&self.layout, &other.layout) {
            return Err(Error::Mismatch(format!(
                "jets of dimension/order ({}, {}) and ({}, {})",
                self.dim(),
                self.order(),
                other.dim(),
                other.order()
            )));
        }
        if self.point != other.point {
            return Err(Error::Mismatch("jets expanded at different points".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Jet<S>) -> Result<Jet<S>> {
        self.check(other)?;
        Ok(self.zip(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Jet<S>) -> Result<Jet<S>> {
        self.check(other)?;
        Ok(self.zip(other, |a, b| a - b))
    }

    fn zip(&self, other: &Jet<S>, f: impl Fn(S, S) -> S) -> Jet<S> {
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| f(a, b)).collect();
        Jet { layout: self.layout.clone(), point: self.point.clone(), coeffs }
    }

    pub fn scale(&self, c: f64) -> Jet<S> {
        self.map(|&a| a.scale(c))
    }

    /// Multiply every entry by a scalar of the same type.
    pub fn scale_by(&self, s: S) -> Jet<S> {
        self.map(|&a| a * s)
    }

    /// Add a scalar to the value entry.
    pub fn add_value(&self, s: S) -> Jet<S> {
        let mut out = self.clone();
        out.coeffs[0] = out.coeffs[0] + s;
        out
    }

    pub fn neg(&self) -> Jet<S> {
        self.map(|&a| -a)
    }

    /// Leibniz rule `∂^α(ab) = Σ_{β ≤ α} binom(α, β) ∂^β a ∂^{α−β} b`.
    pub fn mul(&self, other: &Jet<S>) -> Result<Jet<S>> {
        self.check(other)?;
        let coeffs = (0..self.coeffs.len())
            .map(|a| {
                let mut terms = self.layout.product_terms(a).iter().map(|&(b, r, c)| {
                    let t = self.coeffs[b] * other.coeffs[r];
                    if c == 1.0 {
                        t
                    } else {
                        t.scale(c)
                    }
                });
                let first = terms.next().expect("β = 0 always contributes");
                terms.fold(first, |acc, t| acc + t)
            })
            .collect();
        Ok(Jet { layout: self.layout.clone(), point: self.point.clone(), coeffs })
    }

    /// Jet of `g ∘ f` given `derivs[k] = g^(k)(f(x))` for `k = 0..=K`.
    pub fn compose(&self, derivs: &[S]) -> Result<Jet<S>> {
        if derivs.len() <= self.order() {
            return Err(Error::Shape(format!(
                "composition needs {} outer derivatives, got {}",
                self.order() + 1,
                derivs.len()
            )));
        }
        let coeffs = (0..self.coeffs.len())
            .map(|a| {
                let mut terms = self.layout.fdb_terms(a).iter().map(|term| {
                    let mut t = derivs[term.order];
                    for &f in &term.factors {
                        t = t * self.coeffs[f];
                    }
                    if term.multiplicity == 1.0 {
                        t
                    } else {
                        t.scale(term.multiplicity)
                    }
                });
                let first = terms.next().expect("every α has at least one partition");
                terms.fold(first, |acc, t| acc + t)
            })
            .collect();
        Ok(Jet { layout: self.layout.clone(), point: self.point.clone(), coeffs })
    }

    /// `tanh ∘ f`, using `tanh^(k) = P_k(tanh)`.
    pub fn tanh(&self) -> Jet<S> {
        let t = self.coeffs[0].tanh();
        let mut derivs = Vec::with_capacity(self.order() + 1);
        derivs.push(t);
        for k in 1..=self.order() {
            let poly = tanh_deriv_poly(k).expect("order is capped below the polynomial limit");
            derivs.push(horner(&poly, t));
        }
        self.compose(&derivs).expect("derivative count matches order")
    }
}

/// Evaluate `Σ_j c_j t^j`.
fn horner<S: Scalar>(coeffs: &[f64], t: S) -> S {
    let mut acc = t.lift(*coeffs.last().unwrap_or(&0.0));
    for &c in coeffs.iter().rev().skip(1) {
        acc = acc * t;
        if c != 0.0 {
            acc = acc.offset(c);
        }
    }
    acc
}
