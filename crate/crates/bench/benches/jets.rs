use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use kropina_core::autodiff::jet_variable;
use kropina_core::expr::{eval_expr, parse, ConstEnv};
use kropina_core::metrics::{make_metric, EvalPoint, MetricSpec};

fn expression_jets(c: &mut Criterion) {
    let expr = parse("exp(0.2*x1)*sin(x2) + x1^2*x2/(2 - x1) + sqrt(1 + x2^2)").unwrap();
    let env = ConstEnv::new();
    let mut group = c.benchmark_group("eval_expr");
    for order in [2, 4, 6] {
        let x1 = jet_variable(0.4, 0, order).unwrap();
        let x2 = jet_variable(0.7, 1, order).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(order), &order, |b, _| {
            b.iter(|| eval_expr(black_box(&expr), &env, black_box(&x1), black_box(&x2)).unwrap())
        });
    }
    group.finish();
}

fn metric_jets(c: &mut Criterion) {
    let metric = make_metric(&MetricSpec::canonical("sin(x1)*cos(x2) + x1^2")).unwrap();
    let pt = EvalPoint::from_parts([0.4, 0.6], [1.0, 0.3]);
    let mut group = c.benchmark_group("metric_eval_l");
    for order in [2, 3, 4] {
        group.bench_with_input(BenchmarkId::from_parameter(order), &order, |b, &order| {
            b.iter(|| metric.eval_l(black_box(&pt), order).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, expression_jets, metric_jets);
criterion_main!(benches);
