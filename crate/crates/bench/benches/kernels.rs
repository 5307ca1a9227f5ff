use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dyadic_bench::envelope_data;
use dyadic_core::phi::phi;
use dyadic_core::{integrate, level_set_measure, rhs_viscous, shoot, IntegratorConfig, ModelParams, SystemKind};

fn params() -> ModelParams {
    ModelParams::new(2.0, 2.5).unwrap()
}

fn bench_rhs(c: &mut Criterion) {
    let p = params();
    let mut g = c.benchmark_group("rhs_viscous");
    for n in [12, 48] {
        let a = envelope_data(&p, n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &a, |b, a| b.iter(|| rhs_viscous(&p, black_box(a))));
    }
    g.finish();
}

fn bench_phi(c: &mut Criterion) {
    c.bench_function("phi", |b| b.iter(|| phi(black_box(-0.37))));
}

fn bench_integrate(c: &mut Criterion) {
    let p = params();
    let cfg = IntegratorConfig::with_t_end(1.0);
    let mut g = c.benchmark_group("integrate");
    g.sample_size(10);
    for n in [6, 12] {
        let a = envelope_data(&p, n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &a, |b, a| {
            b.iter(|| integrate(&p, black_box(a), &cfg, SystemKind::Viscous).unwrap())
        });
    }
    g.finish();
}

fn bench_shoot(c: &mut Criterion) {
    let p = params();
    let mut g = c.benchmark_group("shoot");
    for n in [40, 400] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| b.iter(|| shoot(&p, black_box(n)).unwrap()));
    }
    g.finish();
}

fn bench_level_set(c: &mut Criterion) {
    let p = params();
    let traj = integrate(&p, &envelope_data(&p, 12), &IntegratorConfig::with_t_end(2.0), SystemKind::Viscous).unwrap();
    c.bench_function("level_set_measure", |b| b.iter(|| level_set_measure(&traj, 3, black_box(1e-2)).unwrap()));
}

criterion_group!(benches, bench_rhs, bench_phi, bench_integrate, bench_shoot, bench_level_set);
criterion_main!(benches);
