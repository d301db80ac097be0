use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use optospring::sim::{ensemble_variance, SimConfig};
use optospring::sweep::{response_sweep, stability_map, ExperimentConfig};
use optospring::Execution;

const POLICIES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn grids(c: &mut Criterion) {
    let mut config = ExperimentConfig::paper_defaults();
    config.stability_map.phi_count = 101;
    config.stability_map.power_count = 51;
    let mut group = c.benchmark_group("stability_map_101x51");
    for (name, exec) in POLICIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(stability_map(&config, exec).unwrap()))
        });
    }
    group.finish();

    let config = ExperimentConfig::paper_defaults();
    let mut group = c.benchmark_group("response_sweep_5x201");
    for (name, exec) in POLICIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(response_sweep(&config, exec).unwrap()))
        });
    }
    group.finish();
}

fn ensembles(c: &mut Criterion) {
    let config = ExperimentConfig::paper_defaults();
    let op = config.operating_point(-0.45, 3.2e-3).unwrap();
    let sim = SimConfig {
        duration: 2e-3,
        burn_in: 0.0,
        n_trajectories: 8,
        ..SimConfig::for_operating_point(&op)
    };
    let mut group = c.benchmark_group("ensemble_8x2ms");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(ensemble_variance(&op, &sim, exec).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, grids, ensembles);
criterion_main!(benches);
