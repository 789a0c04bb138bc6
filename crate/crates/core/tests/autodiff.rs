use proptest::prelude::*;

use pinn_core::autodiff::{jet_variable, multi_indices, num_multi_indices, set_partitions, Jet, JetLayout, Tape};
use pinn_core::network::{bell_number, forward_jet, Arch, MlpParams};
use pinn_core::operators::Expr;
use pinn_core::problem::{rng_for, Stream};
use pinn_core::Error;

fn binom(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Central difference of `∂^{α−e_i}` along `e_i`, computed from closed-form
/// evaluations only (nested differences).
fn fd_partial(f: &dyn Fn(&[f64]) -> f64, x: &[f64], alpha: &[u32], h: f64) -> f64 {
    match alpha.iter().position(|&a| a > 0) {
        None => f(x),
        Some(i) => {
            let mut lower = alpha.to_vec();
            lower[i] -= 1;
            let (mut xp, mut xm) = (x.to_vec(), x.to_vec());
            xp[i] += h;
            xm[i] -= h;
            (fd_partial(f, &xp, &lower, h) - fd_partial(f, &xm, &lower, h)) / (2.0 * h)
        }
    }
}

#[test]
fn layout_sizes_match_stars_and_bars() {
    for d in 1..=4 {
        for k in 0..=4 {
            assert_eq!(num_multi_indices(d, k), binom(d + k, k));
            assert_eq!(multi_indices(d, k).len(), binom(d + k, k));
        }
    }
}

#[test]
fn set_partition_counts_are_bell_numbers() {
    for n in 0..=7 {
        assert_eq!(set_partitions(n).len() as u64, bell_number(n).unwrap());
    }
}

#[test]
fn layout_rejects_excessive_order() {
    assert!(matches!(JetLayout::get(2, 9), Err(Error::OrderTooHigh { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn expression_jets_match_nested_differences(x0 in -1.0f64..1.0, x1 in -1.0f64..1.0) {
        let e = Expr::parse("sin(x0) * exp(0.5*x1) + x0^3 * x1 - tanh(x0 - x1)").unwrap();
        let x = [x0, x1];
        let jet = e.jet(&x, 2).unwrap();
        let f = |y: &[f64]| e.eval(y);
        for (c, alpha) in jet.layout().indices().iter().enumerate() {
            let fd = fd_partial(&f, &x, alpha.exponents(), 1e-4);
            prop_assert!((fd - jet.coeffs()[c]).abs() < 1e-5 * (1.0 + fd.abs()), "{:?}: {} vs {}", alpha, fd, jet.coeffs()[c]);
        }
    }

    #[test]
    fn jet_product_is_leibniz(a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let x = [a, b];
        let u = jet_variable(0, &x, 3).unwrap().sin();
        let v = jet_variable(1, &x, 3).unwrap().exp();
        let prod = u.mul(&v).unwrap();
        let e = Expr::parse("sin(x0) * exp(x1)").unwrap().jet(&x, 3).unwrap();
        for (p, q) in prod.coeffs().iter().zip(e.coeffs()) {
            prop_assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn jet_tanh_matches_expression(a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let x = [a, b];
        let z = jet_variable(0, &x, 4).unwrap().mul(&jet_variable(1, &x, 4).unwrap()).unwrap();
        let t = z.tanh();
        let e = Expr::parse("tanh(x0 * x1)").unwrap().jet(&x, 4).unwrap();
        for (p, q) in t.coeffs().iter().zip(e.coeffs()) {
            prop_assert!((p - q).abs() < 1e-9 * (1.0 + q.abs()));
        }
    }

    #[test]
    fn tape_gradient_matches_differences(a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0) {
        let f = |v: &[f64]| (v[0] * v[1] + v[2]).tanh() * v[0] - 3.0 * v[2] * v[2];
        let tape = Tape::new();
        let vars = tape.vars(&[a, b, c]);
        let out = (vars[0] * vars[1] + vars[2]).tanh() * vars[0] - vars[2] * vars[2] * tape.constant(3.0);
        let g = tape.gradient(out, &vars).unwrap();
        for i in 0..3 {
            let mut p = [a, b, c];
            let mut m = [a, b, c];
            p[i] += 1e-6;
            m[i] -= 1e-6;
            let fd = (f(&p) - f(&m)) / 2e-6;
            prop_assert!((fd - g[i]).abs() < 1e-7);
        }
    }

    #[test]
    fn jets_are_linear(a in -1.0f64..1.0, s in -3.0f64..3.0) {
        let x = [a];
        let u = Expr::parse("exp(x0)").unwrap().jet(&x, 3).unwrap();
        let v = Expr::parse("cos(x0)").unwrap().jet(&x, 3).unwrap();
        let lhs = u.scale(s).add(&v).unwrap();
        let rhs = Expr::parse(&format!("{s}*exp(x0) + cos(x0)")).unwrap().jet(&x, 3).unwrap();
        for (p, q) in lhs.coeffs().iter().zip(rhs.coeffs()) {
            prop_assert!((p - q).abs() < 1e-12);
        }
    }
}

#[test]
fn network_jets_on_tape_carry_parameter_gradients() {
    let arch = Arch::new(2, 3, 2, 1).unwrap();
    let params = MlpParams::init(arch, &mut rng_for(4, Stream::Init));
    let x = [0.3, -0.4];
    let tape = Tape::new();
    let theta = tape.vars(params.theta());
    let jets: Vec<Jet<_>> = forward_jet(arch, &theta, &x, 2).unwrap();
    // Laplacian of the output as a function of θ.
    let lap = jets[0].get(&[2, 0]).unwrap() + jets[0].get(&[0, 2]).unwrap();
    let g = tape.gradient(lap, &theta).unwrap();
    let lap_of = |t: &[f64]| {
        let j = forward_jet(arch, t, &x, 2).unwrap();
        j[0].get(&[2, 0]).unwrap() + j[0].get(&[0, 2]).unwrap()
    };
    for k in 0..theta.len() {
        let mut p = params.theta().to_vec();
        let mut m = p.clone();
        p[k] += 1e-6;
        m[k] -= 1e-6;
        let fd = (lap_of(&p) - lap_of(&m)) / 2e-6;
        assert!((fd - g[k]).abs() < 1e-6 * (1.0 + fd.abs()), "{k}: {fd} vs {}", g[k]);
    }
}

#[test]
fn cleared_tape_rejects_old_handles() {
    let tape = Tape::new();
    let a = tape.var(1.0);
    let out = a * a;
    tape.clear();
    assert!(matches!(tape.gradient(out, &[a]), Err(Error::StaleNode)));
}
