use pinn_core::autodiff::Tape;
use pinn_core::exec::Exec;
use pinn_core::experiments::log_log_fit;
use pinn_core::network::{Arch, MlpParams};
use pinn_core::operators::{self, Expr};
use pinn_core::problem::{advection_model_solution, advection_problem, rng_for, BoxDomain, Counts, Problem, SampleSet, Stream};
use pinn_core::risk::{
    empirical_risk, physics_inconsistency, ridge_risk, risk_on_tape, sobolev_risk, theoretical_risk_mc, ClosedForm, Lambdas,
    McConfig, RiskEvaluator, RiskKind, RiskSpec,
};

fn line_problem() -> Problem {
    Problem {
        domain: BoxDomain::unit(1),
        faces: Vec::new(),
        h: Vec::new(),
        u_star: Some(vec![Expr::parse("1").unwrap()]),
        sigma: 0.0,
        supp: None,
        d2: 1,
    }
}

fn one_point_spec(lambdas: Lambdas, collocation: Vec<f64>) -> RiskSpec {
    let samples = SampleSet {
        d1: 1,
        d2: 1,
        seed: 0,
        data_x: vec![0.5],
        data_y: vec![1.0],
        boundary_x: Vec::new(),
        boundary_face: Vec::new(),
        boundary_h: Vec::new(),
        collocation_x: collocation,
    };
    RiskSpec { lambdas, m: 1, operators: Vec::new(), problem: line_problem(), samples }
}

fn lambdas(d: f64, e: f64, ridge: f64, t: f64) -> Lambdas {
    Lambdas { d, e, ridge, t }
}

fn advection_spec(n: usize, seed: u64) -> RiskSpec {
    let problem = advection_problem(0.1);
    let samples = problem.sample(Counts { n, n_e: 64, n_r: 64 }, seed).unwrap();
    RiskSpec { lambdas: lambdas(1.0, 1.0, 0.01, 0.1), m: 1, operators: vec![operators::advection()], problem, samples }
}

#[test]
fn zero_network_on_one_observation() {
    let params = MlpParams::zeros(Arch::new(1, 3, 1, 1).unwrap());
    let spec = one_point_spec(lambdas(1.0, 0.0, 1.0, 0.0), Vec::new());
    assert_eq!(empirical_risk(&params, &spec).unwrap().total, 1.0);
}

#[test]
fn ridge_adds_the_squared_parameter_norm() {
    let mut params = MlpParams::zeros(Arch::new(1, 3, 1, 1).unwrap());
    // A hidden weight with no outgoing connection leaves u = 0.
    params.weights_mut(0)[0] = 1.0;
    let spec = one_point_spec(lambdas(1.0, 0.0, 1.0, 0.0), Vec::new());
    assert_eq!(empirical_risk(&params, &spec).unwrap().total, 1.0);
    let r = ridge_risk(&params, &spec).unwrap();
    assert_eq!((r.ridge, r.total), (1.0, 2.0));
}

#[test]
fn constant_network_sobolev_penalty() {
    let c = 0.7;
    let mut params = MlpParams::zeros(Arch::new(2, 4, 1, 1).unwrap());
    params.bias_mut(2)[0] = c;
    let spec = one_point_spec(lambdas(1.0, 0.0, 0.0, 0.3), vec![0.1, 0.4, 0.9]);
    let r = sobolev_risk(&params, &spec).unwrap();
    assert!((r.sobolev - 0.3 * c * c).abs() < 1e-15);
    assert!((r.data - (1.0 - c) * (1.0 - c)).abs() < 1e-15);
}

#[test]
fn kinds_are_ordered() {
    let spec = advection_spec(20, 1);
    let params = MlpParams::init(Arch::new(2, 6, 2, 1).unwrap(), &mut rng_for(1, Stream::Init));
    let e = empirical_risk(&params, &spec).unwrap().total;
    let r = ridge_risk(&params, &spec).unwrap().total;
    let s = sobolev_risk(&params, &spec).unwrap().total;
    assert!(e <= r && r <= s);
}

#[test]
fn engine_gradient_matches_the_tape() {
    let spec = advection_spec(10, 2);
    let arch = Arch::new(2, 4, 2, 1).unwrap();
    let params = MlpParams::init(arch, &mut rng_for(2, Stream::Init));
    for kind in [RiskKind::Empirical, RiskKind::Ridge, RiskKind::Sobolev] {
        let (report, grad) = RiskEvaluator::new(&spec, arch, kind, Exec::Sequential)
            .unwrap()
            .evaluate(params.theta(), true)
            .unwrap();
        let tape = Tape::new();
        let theta = tape.vars(params.theta());
        let out = risk_on_tape(&theta, arch, &spec, kind).unwrap();
        assert!((out.value() - report.total).abs() < 1e-12 * (1.0 + report.total));
        let g = tape.gradient(out, &theta).unwrap();
        for (a, b) in g.iter().zip(grad.unwrap()) {
            assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()), "{kind:?}: {a} vs {b}");
        }
    }
}

#[test]
fn model_solution_is_physically_consistent() {
    let spec = advection_spec(10, 0);
    let field = ClosedForm::new(2, advection_model_solution()).unwrap();
    let mc = McConfig { n_boundary: 4000, n_interior: 4000, seed: 0 };
    let pi = physics_inconsistency(&field, &spec, &mc, Exec::Sequential).unwrap();
    assert!(pi.value.abs() < 1e-25 && pi.se < 1e-12);
}

#[test]
fn data_only_theoretical_risk_equals_empirical() {
    let spec = RiskSpec { lambdas: lambdas(1.0, 0.0, 0.0, 0.0), operators: Vec::new(), ..advection_spec(30, 3) };
    let params = MlpParams::init(Arch::new(1, 5, 2, 1).unwrap(), &mut rng_for(3, Stream::Init));
    let mc = McConfig { n_boundary: 10, n_interior: 10, seed: 0 };
    let th = theoretical_risk_mc(&params, &spec, RiskKind::Empirical, &mc, Exec::Sequential).unwrap();
    let emp = empirical_risk(&params, &spec).unwrap().total;
    assert!((th.total - emp).abs() < 1e-15 && th.se == 0.0);
}

#[test]
fn standard_error_shrinks_like_inverse_root_n() {
    let spec = advection_spec(10, 0);
    let params = MlpParams::init(Arch::new(1, 6, 2, 1).unwrap(), &mut rng_for(5, Stream::Init));
    let sizes = [1000usize, 4000, 16000, 64000];
    let se: Vec<f64> = sizes
        .iter()
        .map(|&n| {
            let mc = McConfig { n_boundary: n, n_interior: n, seed: 11 };
            physics_inconsistency(&params, &spec, &mc, Exec::default()).unwrap().se
        })
        .collect();
    let x: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    let slope = log_log_fit(&x, &se).unwrap().slope;
    assert!((slope + 0.5).abs() < 0.1, "slope {slope}");
}

#[test]
fn invalid_specs_are_rejected() {
    let arch = Arch::new(1, 3, 2, 1).unwrap();
    let bad = RiskSpec { lambdas: lambdas(0.0, 0.0, 0.0, 0.0), ..advection_spec(5, 0) };
    assert!(RiskEvaluator::new(&bad, arch, RiskKind::Empirical, Exec::Sequential).is_err());
    let negative = RiskSpec { lambdas: lambdas(1.0, -1.0, 0.0, 0.0), ..advection_spec(5, 0) };
    assert!(negative.validate().is_err());
    let low_m = RiskSpec { m: 0, ..advection_spec(5, 0) };
    assert!(low_m.validate().is_err());
    let wrong_arch = Arch::new(1, 3, 1, 1).unwrap();
    assert!(RiskEvaluator::new(&advection_spec(5, 0), wrong_arch, RiskKind::Empirical, Exec::Sequential).is_err());
}
