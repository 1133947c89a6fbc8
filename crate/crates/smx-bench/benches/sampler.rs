use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use smx_core::{
    analytic_score, heun_sample, karras_schedule, mixed_score, GaussianClass, MixSpec,
};

fn bench_score(c: &mut Criterion) {
    let mut group = c.benchmark_group("analytic_score");
    for d in [2usize, 8, 16] {
        let class = GaussianClass::isotropic(vec![0.5; d], 1.0).unwrap();
        let x = vec![0.25; d];
        group.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, _| {
            b.iter(|| analytic_score(&x, 1.5, &class).unwrap())
        });
    }
    group.finish();
}

fn bench_heun(c: &mut Criterion) {
    let mut group = c.benchmark_group("heun_sample");
    group.sample_size(20);
    let a = GaussianClass::isotropic(vec![1.0, 0.0], 0.8).unwrap();
    let b_class = GaussianClass::isotropic(vec![-1.0, 0.0], 1.2).unwrap();
    let spec = MixSpec::from_lambda(0.5).unwrap();
    for steps in [32usize, 64, 128] {
        let schedule = karras_schedule(0.002, 80.0, steps, 7.0).unwrap();
        let score = |x: &[f64], s: f64| mixed_score(x, s, &a, &b_class, &spec).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(steps), &steps, |bench, _| {
            bench.iter(|| heun_sample(&score, &schedule, 2, 64, 5).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_score, bench_heun);
criterion_main!(benches);
