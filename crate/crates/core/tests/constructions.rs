use pinn_core::constructions::{
    advection_bumps, advection_bumps_closed_form, bump_delta_max, friction_network, heat_counterexample,
    heat_counterexample_network, sharp_tanh, sign_limit, sign_limit_network,
};
use pinn_core::exec::Exec;
use pinn_core::network::Engine;
use pinn_core::problem::heat_initial_condition;

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[test]
fn friction_network_matches_its_closed_form() {
    let data = [(0.15, 0.3), (0.9, -1.0), (0.42, 2.0), (0.66, 0.5)];
    for h in 1..=3 {
        for p in [1.0, 10.0, 100.0] {
            let f = friction_network(&data, &[0.05, 0.5], p, h, 5).unwrap();
            for x in grid(-0.5, 1.5, 101) {
                let v = f.params.forward(&[x]).unwrap()[0];
                assert!((v - f.closed_form(x, p)).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn friction_network_interpolates_with_flat_derivatives() {
    let data = [(0.1, 1.0), (0.35, 0.2), (0.6, -0.4), (0.85, 0.9)];
    let colloc = [0.2, 0.5, 0.75];
    let f = friction_network(&data, &colloc, 1e4, 2, 3).unwrap();
    assert!((f.delta - 0.1).abs() < 1e-12);
    let engine = Engine::new(f.params.arch(), 2).unwrap();
    let pts: Vec<f64> = data.iter().map(|d| d.0).chain(colloc).collect();
    let jets = engine.evaluate(f.params.theta(), &pts, Exec::Sequential).unwrap();
    for (k, (_, y)) in data.iter().enumerate() {
        assert!((jets.get(k, 0, 0) - y).abs() < 1e-10);
    }
    for k in 0..pts.len() {
        assert!(jets.get(k, 0, 1).abs() < 1e-10 && jets.get(k, 0, 2).abs() < 1e-10);
    }
}

#[test]
fn friction_preconditions() {
    assert!(friction_network(&[(0.1, 0.0)], &[], 1.0, 1, 4).is_err());
    assert!(friction_network(&[(0.1, 0.0), (0.2, 0.0), (0.3, 0.0)], &[], 1.0, 1, 1).is_err());
    assert!(friction_network(&[(0.1, 0.0), (0.2, 0.0)], &[0.1], 1.0, 1, 4).is_err());
    assert!(friction_network(&[(0.1, 0.0), (0.2, 0.0)], &[], 0.0, 1, 4).is_err());
}

#[test]
fn heat_network_matches_its_closed_form() {
    for h in 1..=3 {
        let u0 = heat_initial_condition(h).unwrap();
        for p in [0.5, 5.0, 50.0] {
            let net = heat_counterexample_network(p, h, 4).unwrap();
            for x in grid(-1.0, 1.0, 21) {
                for t in grid(0.0, 1.0, 11) {
                    let v = net.forward(&[x, t]).unwrap()[0];
                    assert!((v - heat_counterexample(x, t, p, h)).abs() < 1e-12);
                }
                assert!((net.forward(&[x, 0.0]).unwrap()[0] - u0.eval(&[x])).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn heat_network_collapses_after_the_initial_time() {
    let net = heat_counterexample_network(1e3, 2, 4).unwrap();
    for x in grid(-1.0, 1.0, 11) {
        for t in [0.1, 0.5, 1.0] {
            assert!(net.forward(&[x, t]).unwrap()[0].abs() < 1e-10);
        }
    }
}

#[test]
fn advection_bumps_match_closed_form_and_limit() {
    let pts = [[0.1, 0.3], [0.4, 0.9], [0.2, 0.6]];
    let ys = [1.5, -0.5, 2.0];
    let delta = bump_delta_max(&pts);
    assert!((delta - 0.05).abs() < 1e-12);
    for h in 1..=3 {
        for p in [2.0, 20.0] {
            let net = advection_bumps(&pts, &ys, delta, p, h, 6).unwrap();
            for t in grid(0.0, 1.0, 11) {
                for x in grid(0.0, 1.0, 11) {
                    let v = net.forward(&[t, x]).unwrap()[0];
                    assert!((v - advection_bumps_closed_form(&pts, &ys, delta, p, h, [t, x])).abs() < 1e-10);
                }
            }
        }
    }
    let net = advection_bumps(&pts, &ys, delta, 1e4, 2, 6).unwrap();
    for (pt, y) in pts.iter().zip(ys) {
        assert!((net.forward(pt).unwrap()[0] - (1.0 + y)).abs() < 1e-10);
    }
    assert!((net.forward(&[0.0, 0.0]).unwrap()[0] - 1.0).abs() < 1e-10);
}

#[test]
fn sign_limit_network_matches_and_converges() {
    for h in 1..=3 {
        for p in [1.0, 10.0] {
            let net = sign_limit_network(p, h).unwrap();
            for x in grid(-2.0, 2.0, 41) {
                assert!((net.forward(&[x]).unwrap()[0] - sign_limit(x, p, h)).abs() < 1e-14);
            }
        }
        let sharp = sign_limit_network(1e6, h).unwrap();
        assert!((sharp.forward(&[0.3]).unwrap()[0] - 1.0).abs() < 1e-10);
        assert!((sharp.forward(&[-0.3]).unwrap()[0] + 1.0).abs() < 1e-10);
    }
}

#[test]
fn sharp_tanh_tends_to_sign() {
    assert_eq!(sharp_tanh(0.0, 1e9, 3), 0.0);
    assert!((sharp_tanh(1e-3, 1e6, 2) - 1.0).abs() < 1e-12);
    assert!((sharp_tanh(0.2, 1.0, 1) - 0.2f64.tanh()).abs() < 1e-16);
}
