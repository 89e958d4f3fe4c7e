//! Parallel vs sequential execution of the independent-job workloads.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use healthgrid_core::policy::{oracle_fixed_mix, PolicyConfig, PolicyKind};
use healthgrid_core::scenarios::{oracle_testbed, random_grid};
use healthgrid_core::sim::{compare_policies_with, replicate_with, sweep_with, SweepAxis};
use healthgrid_core::Execution;

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn compare(c: &mut Criterion) {
    let s = random_grid(1);
    let configs = [
        PolicyConfig::of(PolicyKind::MinEmission),
        PolicyConfig::of(PolicyKind::MinHealth),
        PolicyConfig::of(PolicyKind::Proportional),
        PolicyConfig::lyapunov(1.0),
        PolicyConfig::lyapunov(10.0),
        PolicyConfig::lyapunov(100.0),
    ];
    let mut g = c.benchmark_group("compare_policies");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new(name, "6x2000"), |b| {
            b.iter(|| compare_policies_with(exec, &s, &configs, 2000, 1).unwrap())
        });
    }
    g.finish();
}

fn sweep(c: &mut Criterion) {
    let s = random_grid(2);
    let values: Vec<f64> = (0..16).map(|k| 2f64.powi(k - 4)).collect();
    let mut g = c.benchmark_group("sweep_v");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new(name, "16x2000"), |b| {
            b.iter(|| sweep_with(exec, &s, &PolicyConfig::default(), SweepAxis::V, &values, 2000, 2).unwrap())
        });
    }
    g.finish();
}

fn replicas(c: &mut Criterion) {
    let s = random_grid(3);
    let seeds: Vec<u64> = (0..16).collect();
    let mut g = c.benchmark_group("replicas");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new(name, "16x2000"), |b| {
            b.iter(|| replicate_with(exec, &s, &PolicyConfig::default(), 2000, &seeds).unwrap())
        });
    }
    g.finish();
}

fn oracle(c: &mut Criterion) {
    let s = oracle_testbed();
    let mut g = c.benchmark_group("oracle_fixed_mix");
    g.sample_size(20);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new(name, "231^2"), |b| b.iter(|| oracle_fixed_mix(&s, 100, 0.05, exec).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, compare, sweep, replicas, oracle);
criterion_main!(benches);
