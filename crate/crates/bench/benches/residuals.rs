use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use kropina_core::analysis::{minkowski_residuals, projectivity_residuals, system_i_residuals, EquationSet, Grid};
use kropina_core::geodesics::integrate_geodesic;
use kropina_core::metrics::{make_metric, MetricSpec};

fn grid() -> Grid {
    Grid::new([0.2, 0.8], [0.2, 0.8]).with_counts(6, 6).with_dirs(12).with_seed(Some(42))
}

fn residual_scans(c: &mut Criterion) {
    let canonical = make_metric(&MetricSpec::canonical("sin(x1)*cos(x2) + 3*x1")).unwrap();
    let general = make_metric(&MetricSpec::kropina_general("1 + 0.3*x2", "0.2*x1", "2", "0.1*x1")).unwrap();
    let g = grid();
    c.bench_function("projectivity/canonical", |b| {
        b.iter(|| projectivity_residuals(black_box(&canonical), &g).unwrap())
    });
    c.bench_function("projectivity/general", |b| {
        b.iter(|| projectivity_residuals(black_box(&general), &g).unwrap())
    });
    c.bench_function("system_i/general", |b| {
        b.iter(|| system_i_residuals(black_box(&general), &g, EquationSet::Corrected).unwrap())
    });
    c.bench_function("minkowski/canonical", |b| {
        b.iter(|| minkowski_residuals(black_box(&canonical), &g).unwrap())
    });
}

fn geodesic(c: &mut Criterion) {
    let metric = make_metric(&MetricSpec::canonical("x1^2 + 0.5*x1*x2")).unwrap();
    c.bench_function("geodesic/rk4_200", |b| {
        b.iter(|| integrate_geodesic(black_box(&metric), [0.6, 0.4], [1.0, 0.3], 0.3, 200, None).unwrap())
    });
}

criterion_group!(benches, residual_scans, geodesic);
criterion_main!(benches);
