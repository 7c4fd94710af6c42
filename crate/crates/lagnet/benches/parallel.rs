//! Rayon fan-out against a sequential baseline on the two batch workloads:
//! per-net delta-equivalence checks and the stiff-limit mass sweep.
//!
//! Both sides call the same per-item entry points; only the iteration
//! strategy differs, so the comparison isolates the parallel speedup.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::DVector;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use lagnet::bp::{chain_rule_deltas, gram_deltas, limit_row, LimitOptions};
use lagnet::signal::{AnalyticSignal, SignalSchedule};
use lagnet::verify::{random_network, random_weights};

fn delta_deviation(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = random_network(&mut rng, 24);
    let w = random_weights(&mut rng, &net);
    let e: Vec<f64> = (0..net.input_count()).map(|_| rng.random_range(-2.0..2.0)).collect();
    let x = net.forward_pass(&e, &w).unwrap();
    let y = DVector::from_fn(net.output_count(), |_, _| rng.random_range(-2.0..2.0));
    let chain = chain_rule_deltas(&net, &x, &w, &y);
    let gram = gram_deltas(&net, &x, &w, &y).unwrap();
    (gram - chain.deltas).amax()
}

fn bench_delta_equivalence(c: &mut Criterion) {
    let seeds: Vec<u64> = (0..64).collect();
    let mut group = c.benchmark_group("delta_equivalence_batch");
    group.bench_with_input(BenchmarkId::new("sequential", seeds.len()), &seeds, |b, seeds| {
        b.iter(|| seeds.iter().map(|&s| delta_deviation(s)).fold(0.0, f64::max))
    });
    group.bench_with_input(BenchmarkId::new("rayon", seeds.len()), &seeds, |b, seeds| {
        b.iter(|| seeds.par_iter().map(|&s| delta_deviation(s)).reduce(|| 0.0, f64::max))
    });
    group.finish();
}

fn bench_mass_sweep(c: &mut Criterion) {
    let mut d = lagnet::NetworkDescription::new(1);
    let u = d.unit(lagnet::Activation::Identity);
    d.edge(u, 0).output(u);
    let net = d.build().unwrap();
    let schedule = SignalSchedule::new(vec![vec![1.5], vec![2.5]], 1.0, 0.1).unwrap();
    let target = AnalyticSignal::Constant(vec![3.0]);
    let options = LimitOptions { horizon: 2.0, dt_base: 1e-2, ..LimitOptions::default() };
    let pairs: Vec<(f64, f64)> = [2e-1, 1e-1, 5e-2, 2e-2, 1e-2, 5e-3]
        .iter()
        .map(|&mw| (mw * mw, mw))
        .collect();

    let mut group = c.benchmark_group("mass_sweep");
    group.sample_size(10);
    group.bench_with_input(BenchmarkId::new("sequential", pairs.len()), &pairs, |b, pairs| {
        b.iter(|| {
            pairs
                .iter()
                .map(|&(mx, mw)| limit_row(&net, &schedule, &target, 1.0, mx, mw, &options))
                .count()
        })
    });
    group.bench_with_input(BenchmarkId::new("rayon", pairs.len()), &pairs, |b, pairs| {
        b.iter(|| {
            pairs
                .par_iter()
                .map(|&(mx, mw)| limit_row(&net, &schedule, &target, 1.0, mx, mw, &options))
                .count()
        })
    });
    group.finish();
}

criterion_group!(benches, bench_delta_equivalence, bench_mass_sweep);
criterion_main!(benches);
