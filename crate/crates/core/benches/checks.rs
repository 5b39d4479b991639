//! Sequential versus parallel evaluation of sampled checks.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dirichlet_core::energy::{graph_p_energy, GraphSpec};
use dirichlet_core::{Checker, EnergyFunctional, Execution, MeasureSpace, Sampler, Strategy};

fn energy(p: f64) -> EnergyFunctional {
    let space = MeasureSpace::uniform(12).unwrap();
    let edges = GraphSpec::Random { seed: 5, probability: 0.4, min_weight: 0.1, max_weight: 1.0 }.edges(&space).unwrap();
    graph_p_energy(&space, &edges, p).unwrap()
}

fn modes(c: &mut Criterion) {
    let e = energy(3.0);
    let mut group = c.benchmark_group("checks");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        let checker = Checker { exec, flow_tol: 1e-3, ..Checker::default() };
        let label = format!("{exec:?}");
        group.bench_with_input(BenchmarkId::new("resolvent_identity", &label), &checker, |b, ch| {
            let sampler = Sampler::new(1, Strategy::IidGaussian, 64);
            b.iter(|| ch.check_resolvent_identity(&e, &[(0.1, 1.0), (0.5, 0.1)], &sampler).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("markov_suite", &label), &checker, |b, ch| {
            let pairs = Sampler::new(2, Strategy::IidGaussian, 64);
            let ops = Sampler::new(3, Strategy::IidGaussian, 16);
            b.iter(|| ch.check_markov_suite(&e, &pairs, &ops, &[0.0, 0.5], &[0.1], &[0.1]).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, modes);
criterion_main!(benches);
