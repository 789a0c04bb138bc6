use serde::{Deserialize, Serialize};

use super::expr::Expr;
use crate::autodiff::{multi_indices, Jet, JetLayout, MultiIndex, Scalar, K_MAX};
use crate::error::{Error, Result};

/// `(∂^α u_i)^exp` inside a monomial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub i: usize,
    pub alpha: MultiIndex,
    #[serde(default = "one")]
    pub exp: u32,
}

fn one() -> u32 {
    1
}

/// `coef(x) · Π factors`; an empty factor list is a source term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: Expr,
    #[serde(default)]
    pub factors: Vec<Factor>,
}

/// `F(u, x) = Σ_k φ_k(x) Π_{(i,α,I)} (∂^α u_i(x))^I`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyOperator {
    d1: usize,
    d2: usize,
    monomials: Vec<Monomial>,
}

/// One linear term `A(x) ∂^α u_i` of an affine operator.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearTerm {
    pub i: usize,
    pub alpha: MultiIndex,
    pub coef: Expr,
}

/// `F(u, x) = Σ A(x) ∂^α u_i(x) + B(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineOperator {
    d1: usize,
    d2: usize,
    terms: Vec<LinearTerm>,
    source: Expr,
}

fn check_factor(d1: usize, d2: usize, i: usize, alpha: &MultiIndex) -> Result<()> {
    if i >= d2 {
        return Err(Error::InvalidSpec(format!("component {i} out of range for d2 = {d2}")));
    }
    if alpha.dim() != d1 {
        return Err(Error::InvalidSpec(format!("multi-index {alpha:?} has length {} but d1 = {d1}", alpha.dim())));
    }
    if alpha.order() as usize > K_MAX {
        return Err(Error::OrderTooHigh { order: alpha.order() as usize, max: K_MAX });
    }
    Ok(())
}

impl PolyOperator {
    pub fn new(d1: usize, d2: usize, monomials: Vec<Monomial>) -> Result<Self> {
        if d1 == 0 || d2 == 0 {
            return Err(Error::InvalidSpec("operator dimensions must be positive".into()));
        }
        if monomials.is_empty() {
            return Err(Error::InvalidSpec("operator without monomials".into()));
        }
        for m in &monomials {
            m.coef.check_dim(d1)?;
            for f in &m.factors {
                check_factor(d1, d2, f.i, &f.alpha)?;
                if f.exp == 0 {
                    return Err(Error::InvalidSpec("factor exponents must be at least 1".into()));
                }
            }
        }
        Ok(PolyOperator { d1, d2, monomials })
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d2
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    /// Highest derivative order used.
    pub fn order(&self) -> usize {
        self.monomials.iter().flat_map(|m| &m.factors).map(|f| f.alpha.order() as usize).max().unwrap_or(0)
    }

    /// `max_k Σ (1 + |α|) I` over monomials; source terms count 0.
    pub fn degree(&self) -> usize {
        self.monomials
            .iter()
            .map(|m| m.factors.iter().map(|f| (1 + f.alpha.order() as usize) * f.exp as usize).sum())
            .max()
            .unwrap_or(0)
    }

    /// `F(u, x)` from output jets `jets[i]` of `u_i` at `x`.
    pub fn residual<S: Scalar>(&self, jets: &[Jet<S>], x: &[f64]) -> Result<S> {
        if jets.len() != self.d2 {
            return Err(Error::Shape(format!("expected {} output jets, got {}", self.d2, jets.len())));
        }
        let seed = jets[0].value();
        let mut acc = seed.lift(0.0);
        for m in &self.monomials {
            let mut t = seed.lift(m.coef.eval(x));
            for f in &m.factors {
                let d = jets[f.i].get(f.alpha.exponents())?;
                for _ in 0..f.exp {
                    t = t * d;
                }
            }
            acc = acc + t;
        }
        Ok(acc)
    }

    /// Flatten into index form against a jet layout.
    pub fn compile(&self, layout: &JetLayout) -> Result<CompiledOperator> {
        let monomials = self
            .monomials
            .iter()
            .map(|m| {
                let factors = m
                    .factors
                    .iter()
                    .map(|f| {
                        let c = layout.index_of(f.alpha.exponents()).ok_or_else(|| Error::MissingDerivative {
                            alpha: f.alpha.exponents().to_vec(),
                            order: layout.order(),
                        })?;
                        Ok((f.i * layout.len() + c, f.exp))
                    })
                    .collect::<Result<_>>()?;
                Ok(CompiledMonomial { coef: m.coef.clone(), factors })
            })
            .collect::<Result<_>>()?;
        Ok(CompiledOperator { monomials })
    }
}

impl AffineOperator {
    pub fn new(d1: usize, d2: usize, terms: Vec<LinearTerm>, source: Expr) -> Result<Self> {
        if d1 == 0 || d2 == 0 {
            return Err(Error::InvalidSpec("operator dimensions must be positive".into()));
        }
        for t in &terms {
            check_factor(d1, d2, t.i, &t.alpha)?;
            t.coef.check_dim(d1)?;
        }
        source.check_dim(d1)?;
        Ok(AffineOperator { d1, d2, terms, source })
    }

    pub fn terms(&self) -> &[LinearTerm] {
        &self.terms
    }

    pub fn source(&self) -> &Expr {
        &self.source
    }

    pub fn order(&self) -> usize {
        self.terms.iter().map(|t| t.alpha.order() as usize).max().unwrap_or(0)
    }

    /// Equivalent polynomial operator: one exponent-1 monomial per term plus
    /// the source as a constant monomial.
    pub fn to_poly(&self) -> PolyOperator {
        let mut monomials: Vec<Monomial> = self
            .terms
            .iter()
            .map(|t| Monomial { coef: t.coef.clone(), factors: vec![Factor { i: t.i, alpha: t.alpha.clone(), exp: 1 }] })
            .collect();
        if !self.source.is_constant_zero() || monomials.is_empty() {
            monomials.push(Monomial { coef: self.source.clone(), factors: Vec::new() });
        }
        PolyOperator { d1: self.d1, d2: self.d2, monomials }
    }
}

/// A polynomial or affine operator; both evaluate through the polynomial form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OperatorSpec", into = "OperatorSpec")]
pub enum Operator {
    Poly(PolyOperator),
    Affine(AffineOperator),
}

impl Operator {
    pub fn as_poly(&self) -> PolyOperator {
        match self {
            Operator::Poly(p) => p.clone(),
            Operator::Affine(a) => a.to_poly(),
        }
    }

    pub fn d1(&self) -> usize {
        match self {
            Operator::Poly(p) => p.d1,
            Operator::Affine(a) => a.d1,
        }
    }

    pub fn d2(&self) -> usize {
        match self {
            Operator::Poly(p) => p.d2,
            Operator::Affine(a) => a.d2,
        }
    }

    pub fn order(&self) -> usize {
        match self {
            Operator::Poly(p) => p.order(),
            Operator::Affine(a) => a.order(),
        }
    }

    pub fn degree(&self) -> usize {
        self.as_poly().degree()
    }

    pub fn residual<S: Scalar>(&self, jets: &[Jet<S>], x: &[f64]) -> Result<S> {
        self.as_poly().residual(jets, x)
    }

    pub fn compile(&self, layout: &JetLayout) -> Result<CompiledOperator> {
        self.as_poly().compile(layout)
    }
}

/// On-disk form of an [`Operator`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub kind: OperatorKind,
    pub d1: usize,
    pub d2: usize,
    pub monomials: Vec<Monomial>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Expr>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    Poly,
    Affine,
}

impl TryFrom<OperatorSpec> for Operator {
    type Error = Error;
    fn try_from(s: OperatorSpec) -> Result<Operator> {
        match s.kind {
            OperatorKind::Poly => {
                let mut monomials = s.monomials;
                if let Some(src) = s.source {
                    monomials.push(Monomial { coef: src, factors: Vec::new() });
                }
                Ok(Operator::Poly(PolyOperator::new(s.d1, s.d2, monomials)?))
            }
            OperatorKind::Affine => {
                let terms = s
                    .monomials
                    .into_iter()
                    .map(|m| match m.factors.as_slice() {
                        [f] if f.exp == 1 => Ok(LinearTerm { i: f.i, alpha: f.alpha.clone(), coef: m.coef }),
                        _ => Err(Error::InvalidSpec(
                            "affine monomials must hold exactly one factor with exponent 1".into(),
                        )),
                    })
                    .collect::<Result<_>>()?;
                Ok(Operator::Affine(AffineOperator::new(s.d1, s.d2, terms, s.source.unwrap_or_else(Expr::zero))?))
            }
        }
    }
}

impl From<Operator> for OperatorSpec {
    fn from(op: Operator) -> OperatorSpec {
        match op {
            Operator::Poly(p) => OperatorSpec { kind: OperatorKind::Poly, d1: p.d1, d2: p.d2, monomials: p.monomials, source: None },
            Operator::Affine(a) => OperatorSpec {
                kind: OperatorKind::Affine,
                d1: a.d1,
                d2: a.d2,
                monomials: a
                    .terms
                    .into_iter()
                    .map(|t| Monomial { coef: t.coef, factors: vec![Factor { i: t.i, alpha: t.alpha, exp: 1 }] })
                    .collect(),
                source: Some(a.source),
            },
        }
    }
}

/// Operator flattened against one jet layout for the batched risk loops.
///
/// Factor positions index the per-point jet buffer `[i * n_c + c]` used by
/// the batched engine.
#[derive(Clone, Debug)]
pub struct CompiledOperator {
    monomials: Vec<CompiledMonomial>,
}

#[derive(Clone, Debug)]
struct CompiledMonomial {
    coef: Expr,
    factors: Vec<(usize, u32)>,
}

impl CompiledOperator {
    pub fn n_monomials(&self) -> usize {
        self.monomials.len()
    }

    /// Coefficient values `φ_k(x)`.
    pub fn coefficients(&self, x: &[f64]) -> Vec<f64> {
        self.monomials.iter().map(|m| m.coef.eval(x)).collect()
    }

    pub fn residual(&self, phi: &[f64], jets: &[f64]) -> f64 {
        self.monomials
            .iter()
            .zip(phi)
            .map(|(m, &c)| m.factors.iter().fold(c, |acc, &(pos, e)| acc * jets[pos].powi(e as i32)))
            .sum()
    }

    /// Add `scale · ∂F/∂jets` into `grad`.
    pub fn add_residual_grad(&self, phi: &[f64], jets: &[f64], scale: f64, grad: &mut [f64]) {
        for (m, &c) in self.monomials.iter().zip(phi) {
            for (q, &(pos, e)) in m.factors.iter().enumerate() {
                let mut t = c * scale * e as f64 * jets[pos].powi(e as i32 - 1);
                for (r, &(p2, e2)) in m.factors.iter().enumerate() {
                    if r != q {
                        t *= jets[p2].powi(e2 as i32);
                    }
                }
                grad[pos] += t;
            }
        }
    }
}

/// `∂^α u_i` for each component `i` and `|α| ≤ m + 1`, so that the Sobolev
/// penalty is the sum of their squared residuals.
pub fn sobolev_constraints(m: usize, d1: usize, d2: usize) -> Result<Vec<AffineOperator>> {
    if m + 1 > K_MAX {
        return Err(Error::OrderTooHigh { order: m + 1, max: K_MAX });
    }
    let mut out = Vec::new();
    for i in 0..d2 {
        for alpha in multi_indices(d1, m + 1) {
            out.push(AffineOperator::new(d1, d2, vec![LinearTerm { i, alpha, coef: Expr::constant(1.0) }], Expr::zero())?);
        }
    }
    Ok(out)
}
