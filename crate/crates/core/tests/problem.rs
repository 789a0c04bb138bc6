use pinn_core::operators::Expr;
use pinn_core::problem::{advection_problem, heat_problem, rng_for, BoxDomain, Counts, Face, Problem, Side, Stream};

fn counts(n: usize, n_e: usize, n_r: usize) -> Counts {
    Counts { n, n_e, n_r }
}

#[test]
fn samples_are_deterministic_per_seed() {
    let p = advection_problem(0.1);
    let a = p.sample(counts(50, 40, 30), 9).unwrap();
    let b = p.sample(counts(50, 40, 30), 9).unwrap();
    let c = p.sample(counts(50, 40, 30), 10).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.data_x, c.data_x);
}

#[test]
fn streams_are_independent_of_other_counts() {
    let p = advection_problem(0.1);
    let a = p.sample(counts(20, 10, 10), 3).unwrap();
    let b = p.sample(counts(20, 500, 700), 3).unwrap();
    assert_eq!(a.data_x, b.data_x);
    assert_eq!(a.data_y, b.data_y);
    assert_eq!(a.boundary_x, b.boundary_x[..a.boundary_x.len()]);
}

#[test]
fn observations_lie_in_the_support() {
    let p = advection_problem(0.0);
    let s = p.sample(counts(500, 0, 0), 1).unwrap();
    let u = p.u_star.as_ref().unwrap();
    for (x, y) in s.data_x.chunks(2).zip(&s.data_y) {
        assert!(x[0] >= 0.0 && x[0] <= 0.5 && (0.0..=1.0).contains(&x[1]));
        assert_eq!(*y, u[0].eval(x));
    }
}

#[test]
fn uniform_sample_moments() {
    let dom = BoxDomain::new(vec![-1.0, 0.0], vec![1.0, 3.0]).unwrap();
    let n = 200_000;
    let pts = dom.sample(&mut rng_for(0, Stream::Collocation), n);
    let mean0 = pts.chunks(2).map(|x| x[0]).sum::<f64>() / n as f64;
    let mean1 = pts.chunks(2).map(|x| x[1]).sum::<f64>() / n as f64;
    let var1 = pts.chunks(2).map(|x| (x[1] - 1.5).powi(2)).sum::<f64>() / n as f64;
    assert!(mean0.abs() < 0.01);
    assert!((mean1 - 1.5).abs() < 0.015);
    assert!((var1 - 0.75).abs() < 0.01);
}

#[test]
fn observation_noise_has_the_requested_spread() {
    let mut p = advection_problem(0.5);
    p.supp = None;
    let s = p.sample(counts(50_000, 0, 0), 2).unwrap();
    let u = &p.u_star.as_ref().unwrap()[0];
    let eps: Vec<f64> = s.data_x.chunks(2).zip(&s.data_y).map(|(x, y)| y - u.eval(x)).collect();
    let mean = eps.iter().sum::<f64>() / eps.len() as f64;
    let sd = (eps.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / eps.len() as f64).sqrt();
    assert!(mean.abs() < 0.01);
    assert!((sd - 0.5).abs() < 0.01);
}

#[test]
fn face_weights_follow_face_areas() {
    let heat = heat_problem(2, 1.0).unwrap();
    // t = 0 has length 2, x = ±1 have length 1 each.
    assert_eq!(heat.face_weights(), vec![0.5, 0.25, 0.25]);
    let s = heat.sample(counts(0, 40_000, 0), 5).unwrap();
    let share = s.boundary_face.iter().filter(|&&f| f == 0).count() as f64 / 40_000.0;
    assert!((share - 0.5).abs() < 0.01);
    for (x, (&f, &h)) in s.boundary_x.chunks(2).zip(s.boundary_face.iter().zip(&s.boundary_h)) {
        match f {
            0 => assert_eq!(x[1], 0.0),
            1 => assert_eq!((x[0], h), (-1.0, 0.0)),
            _ => assert_eq!((x[0], h), (1.0, 0.0)),
        }
    }
}

#[test]
fn explicit_face_weights_override_areas() {
    let mut p = advection_problem(0.1);
    p.faces[0].weight = Some(3.0);
    p.faces[1].weight = Some(1.0);
    assert_eq!(p.face_weights(), vec![0.75, 0.25]);
}

#[test]
fn invalid_problems_are_rejected() {
    assert!(BoxDomain::new(vec![0.0], vec![0.0]).is_err());
    let mut p = advection_problem(0.1);
    p.supp = Some(BoxDomain::new(vec![0.0, 0.0], vec![2.0, 1.0]).unwrap());
    assert!(p.validate().is_err());
    let no_truth = Problem {
        domain: BoxDomain::unit(1),
        faces: vec![Face::new(0, Side::Lower)],
        h: vec![Expr::zero()],
        u_star: None,
        sigma: 0.0,
        supp: None,
        d2: 1,
    };
    assert!(no_truth.sample(counts(1, 0, 0), 0).is_err());
    assert!(no_truth.sample(counts(0, 5, 5), 0).is_ok());
}

#[test]
fn problems_round_trip_through_json() {
    let p = heat_problem(3, 2.0).unwrap();
    let back: Problem = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
    assert_eq!(back, p);
}

#[test]
fn csv_dumps_have_one_row_per_point() {
    let p = advection_problem(0.1);
    let s = p.sample(counts(7, 5, 3), 0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    s.write_csv(dir.path()).unwrap();
    let lines = |name: &str| std::fs::read_to_string(dir.path().join(name)).unwrap().lines().count();
    assert_eq!(lines("data.csv"), 8);
    assert_eq!(lines("boundary.csv"), 6);
    assert_eq!(lines("collocation.csv"), 4);
}
