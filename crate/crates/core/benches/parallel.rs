use std::path::Path;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mgdesign::data::{case_study_catalog, make_demo_dataset, Horizon};
use mgdesign::report::{run_experiments, DataSource, RunConfig};
use mgdesign::scenario::{build_scenario_with, extract_features, kmeans_with, Standardization, DEFAULT_RESTARTS};
use mgdesign::Execution;

fn modes() -> Vec<(&'static str, Execution)> {
    vec![
        ("sequential", Execution::Sequential),
        #[cfg(feature = "parallel")]
        ("parallel", Execution::Parallel),
    ]
}

fn clustering(c: &mut Criterion) {
    let days = make_demo_dataset(1, 365);
    let features: Vec<_> = days.iter().map(extract_features).collect();
    let st = Standardization::fit(&features);
    let points: Vec<Vec<f64>> = features.iter().map(|f| st.apply(f)).collect();
    let mut group = c.benchmark_group("kmeans_restarts");
    for (name, exec) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| kmeans_with(&points, 8, 42, DEFAULT_RESTARTS, exec).unwrap())
        });
    }
    group.finish();
}

fn synthesis(c: &mut Criterion) {
    let days = make_demo_dataset(1, 365);
    let mut group = c.benchmark_group("scenario_synthesis");
    for (name, exec) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| build_scenario_with(&days, 5, 30, 42, exec).unwrap())
        });
    }
    group.finish();
}

fn experiments(c: &mut Criterion) {
    let run = RunConfig {
        data: DataSource::Demo { seed: 1, days: 120 },
        horizon: Horizon::new(60, 3, 20, 0.04).unwrap(),
        clusters: 3,
        ..RunConfig::default()
    };
    let days = run.data.load(&run.horizon, Path::new(".")).unwrap();
    let scenario = build_scenario_with(&days, 3, 3, run.seed, Execution::Sequential).unwrap();
    let catalog = case_study_catalog();
    let mut group = c.benchmark_group("experiment_matrix");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run_experiments(&run, &catalog, &scenario, 4, exec))
        });
    }
    group.finish();
}

criterion_group!(benches, clustering, synthesis, experiments);
criterion_main!(benches);
