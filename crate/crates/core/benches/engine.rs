use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use pinn_core::exec::Exec;
use pinn_core::experiments::{advection_spec, HybridConfig};
use pinn_core::network::{Arch, MlpParams};
use pinn_core::problem::{rng_for, Stream};
use pinn_core::risk::{physics_inconsistency, McConfig, RiskEvaluator, RiskKind};

fn modes() -> [(&'static str, Exec); 2] {
    [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)]
}

fn risk_and_gradient(c: &mut Criterion) {
    let cfg = HybridConfig::reduced();
    let spec = advection_spec(&cfg, 100, 0).unwrap();
    let arch = Arch::new(cfg.depth, cfg.width, 2, 1).unwrap();
    let params = MlpParams::init(arch, &mut rng_for(0, Stream::Init));
    let mut group = c.benchmark_group("sobolev_risk_and_gradient");
    group.sample_size(20);
    for (name, exec) in modes() {
        let eval = RiskEvaluator::new(&spec, arch, RiskKind::Sobolev, exec).unwrap();
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| eval.evaluate(black_box(params.theta()), true).unwrap())
        });
    }
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let cfg = HybridConfig::reduced();
    let spec = advection_spec(&cfg, 100, 0).unwrap();
    let params = MlpParams::init(Arch::new(cfg.depth, cfg.width, 2, 1).unwrap(), &mut rng_for(0, Stream::Init));
    let mc = McConfig { n_boundary: 10_000, n_interior: 10_000, seed: 0 };
    let mut group = c.benchmark_group("physics_inconsistency_mc");
    group.sample_size(20);
    for (name, exec) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| physics_inconsistency(black_box(&params), &spec, &mc, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, risk_and_gradient, monte_carlo);
criterion_main!(benches);
