//! Differential operators acting on network outputs.
//!
//! A [`PolyOperator`] is a polynomial in partial derivatives `∂^α u_i` with
//! closed-form coefficient fields; an [`AffineOperator`] is the linear special
//! case plus a source term. Both serialize to the JSON form documented in the
//! repository README.

mod expr;
mod operator;

pub use expr::Expr;
pub use operator::{
    sobolev_constraints, AffineOperator, CompiledOperator, Factor, LinearTerm, Monomial, Operator, OperatorKind,
    OperatorSpec, PolyOperator,
};

use crate::autodiff::MultiIndex;
use crate::error::Result;

fn term(d1: usize, i: usize, alpha: &[u32], coef: f64) -> LinearTerm {
    debug_assert_eq!(alpha.len(), d1);
    LinearTerm { i, alpha: MultiIndex::new(alpha.to_vec()), coef: Expr::constant(coef) }
}

/// `∂_t u + ∂_x u` in coordinates `(t, x)`.
pub fn advection() -> Operator {
    Operator::Affine(
        AffineOperator::new(2, 1, vec![term(2, 0, &[1, 0], 1.0), term(2, 0, &[0, 1], 1.0)], Expr::zero())
            .expect("valid operator"),
    )
}

/// `∂_t u − ∂²_x u` in coordinates `(x, t)`.
pub fn heat() -> Operator {
    Operator::Affine(
        AffineOperator::new(2, 1, vec![term(2, 0, &[0, 1], 1.0), term(2, 0, &[2, 0], -1.0)], Expr::zero())
            .expect("valid operator"),
    )
}

/// `m u'' + γ u'` on a time interval.
pub fn friction(mass: f64, gamma: f64) -> Operator {
    Operator::Affine(
        AffineOperator::new(1, 1, vec![term(1, 0, &[2], mass), term(1, 0, &[1], gamma)], Expr::zero())
            .expect("valid operator"),
    )
}

/// `x u'(x)` on the real line.
pub fn dilation() -> Operator {
    Operator::Affine(
        AffineOperator::new(
            1,
            1,
            vec![LinearTerm { i: 0, alpha: MultiIndex::new(vec![1]), coef: Expr::parse("x0").expect("valid") }],
            Expr::zero(),
        )
        .expect("valid operator"),
    )
}

/// Maxwell's equations in vacuum for `u = (E, B)` over `(x, y, z, t)`:
/// `div E`, `div B`, `∂_t E − curl B` and `∂_t B + curl E`.
pub fn maxwell() -> Vec<Operator> {
    let d = |axis: usize| {
        let mut a = [0u32; 4];
        a[axis] = 1;
        a
    };
    let (x, y, z, t) = (0, 1, 2, 3);
    let e = |c: usize| c;
    let b = |c: usize| 3 + c;
    let mk = |terms: Vec<LinearTerm>| Operator::Affine(AffineOperator::new(4, 6, terms, Expr::zero()).expect("valid"));
    // curl F = (∂_y F_z − ∂_z F_y, ∂_z F_x − ∂_x F_z, ∂_x F_y − ∂_y F_x)
    let curl = |f: &dyn Fn(usize) -> usize, comp: usize, sign: f64| -> Vec<LinearTerm> {
        let (p, q) = match comp {
            0 => ((y, 2), (z, 1)),
            1 => ((z, 0), (x, 2)),
            _ => ((x, 1), (y, 0)),
        };
        vec![term(4, f(p.1), &d(p.0), sign), term(4, f(q.1), &d(q.0), -sign)]
    };
    let mut ops = vec![
        mk((0..3).map(|c| term(4, e(c), &d(c), 1.0)).collect()),
        mk((0..3).map(|c| term(4, b(c), &d(c), 1.0)).collect()),
    ];
    for c in 0..3 {
        let mut terms = vec![term(4, e(c), &d(t), 1.0)];
        terms.extend(curl(&b, c, -1.0));
        ops.push(mk(terms));
    }
    for c in 0..3 {
        let mut terms = vec![term(4, b(c), &d(t), 1.0)];
        terms.extend(curl(&e, c, 1.0));
        ops.push(mk(terms));
    }
    ops
}

/// Incompressible Navier-Stokes for `u = (u_x, u_y, u_z, p)` over
/// `(x, y, z, t)`: three momentum equations (the third carrying the source
/// `g`) and the divergence constraint.
pub fn navier_stokes(eta: f64, rho: f64, g: Expr) -> Result<Vec<Operator>> {
    let unit = |axis: usize| {
        let mut a = vec![0u32; 4];
        a[axis] = 1;
        MultiIndex::new(a)
    };
    let second = |axis: usize| {
        let mut a = vec![0u32; 4];
        a[axis] = 2;
        MultiIndex::new(a)
    };
    let f = |i: usize, alpha: MultiIndex| Factor { i, alpha, exp: 1 };
    let mono = |c: f64, factors: Vec<Factor>| Monomial { coef: Expr::constant(c), factors };
    let mut ops = Vec::new();
    for c in 0..3 {
        let mut monomials = vec![
            mono(1.0, vec![f(c, unit(3))]),
            mono(-1.0, vec![f(c, MultiIndex::zero(4)), f(c, unit(c))]),
            mono(-eta, vec![f(c, second(c))]),
            mono(1.0 / rho, vec![f(3, unit(c))]),
        ];
        if c == 2 {
            monomials.push(Monomial { coef: g.clone(), factors: Vec::new() });
        }
        ops.push(Operator::Poly(PolyOperator::new(4, 4, monomials)?));
    }
    ops.push(Operator::Poly(PolyOperator::new(4, 4, (0..3).map(|c| mono(1.0, vec![f(c, unit(c))])).collect())?));
    Ok(ops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::jet_variable;

    #[test]
    fn degrees_of_library_operators() {
        let ns = navier_stokes(0.1, 2.0, Expr::parse("sin(x0)").unwrap()).unwrap();
        assert_eq!(ns[2].degree(), 3);
        assert_eq!(ns[3].degree(), 2);
        assert_eq!(advection().degree(), 2);
        assert_eq!(heat().degree(), 3);
        assert_eq!(maxwell().len(), 8);
        assert!(maxwell().iter().all(|op| op.order() == 1 && op.degree() == 2));
    }

    #[test]
    fn heat_annihilates_a_linear_field() {
        let x = [0.3, 0.2];
        let u = jet_variable(0, &x, 2).unwrap();
        assert_eq!(heat().residual(&[u], &x).unwrap(), 0.0);
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"kind":"poly","d1":2,"d2":1,
            "monomials":[{"coef":"1","factors":[{"i":0,"alpha":[1,0],"exp":2}]},
                         {"coef":"-x1","factors":[{"i":0,"alpha":[0,1]}]}],
            "source":"exp(x0)"}"#;
        let op: Operator = serde_json::from_str(text).unwrap();
        assert_eq!(op.degree(), 4);
        let back: Operator = serde_json::from_str(&serde_json::to_string(&op).unwrap()).unwrap();
        assert_eq!(back, op);
        let aff: Operator = serde_json::from_str(&serde_json::to_string(&advection()).unwrap()).unwrap();
        assert_eq!(aff, advection());
    }

    #[test]
    fn invalid_specs_are_rejected_at_load() {
        let bad_dim = r#"{"kind":"poly","d1":2,"d2":1,"monomials":[{"coef":"1","factors":[{"i":0,"alpha":[1]}]}]}"#;
        assert!(serde_json::from_str::<Operator>(bad_dim).is_err());
        let bad_comp = r#"{"kind":"affine","d1":1,"d2":1,"monomials":[{"coef":"1","factors":[{"i":1,"alpha":[1]}]}]}"#;
        assert!(serde_json::from_str::<Operator>(bad_comp).is_err());
        let nonlinear = r#"{"kind":"affine","d1":1,"d2":1,"monomials":[{"coef":"1","factors":[{"i":0,"alpha":[1],"exp":2}]}]}"#;
        assert!(serde_json::from_str::<Operator>(nonlinear).is_err());
        let coord = r#"{"kind":"poly","d1":1,"d2":1,"monomials":[{"coef":"x3","factors":[]}]}"#;
        assert!(serde_json::from_str::<Operator>(coord).is_err());
    }

    #[test]
    fn sobolev_constraint_counts() {
        assert_eq!(sobolev_constraints(1, 2, 1).unwrap().len(), 6);
        assert_eq!(sobolev_constraints(0, 1, 1).unwrap().len(), 2);
        assert!(sobolev_constraints(4, 1, 1).is_err());
    }
}
