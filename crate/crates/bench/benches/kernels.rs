use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fracsys_bench::fixture;
use fracsys_core::functional::{gradient, jacobian};
use fracsys_core::operators::assemble_restricted;
use fracsys_core::solver::solve;
use fracsys_core::{FracOrder, ModelDomain, NewtonOptions};
use std::hint::black_box;

fn restricted_assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("restricted_assembly");
    group.sample_size(10);
    let s = FracOrder::new(0.5).unwrap();
    for m in [128usize, 256, 512] {
        let domain = ModelDomain::unit_interval(m).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(m), &domain, |b, d| {
            b.iter(|| assemble_restricted(black_box(d), s).unwrap())
        });
    }
    group.finish();
}

fn derivatives(c: &mut Criterion) {
    let mut group = c.benchmark_group("derivatives");
    for k in [16usize, 32, 64] {
        let (prob, w) = fixture(k);
        group.bench_with_input(BenchmarkId::new("gradient", k), &w, |b, w| {
            b.iter(|| gradient(black_box(w), &prob).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("jacobian", k), &w, |b, w| {
            b.iter(|| jacobian(black_box(w), &prob).unwrap())
        });
    }
    group.finish();
}

fn newton(c: &mut Criterion) {
    let mut group = c.benchmark_group("newton_solve");
    group.sample_size(10);
    for k in [16usize, 32] {
        let (prob, _) = fixture(k);
        group.bench_with_input(BenchmarkId::from_parameter(k), &prob, |b, p| {
            b.iter(|| solve(black_box(p), &NewtonOptions::default()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, restricted_assembly, derivatives, newton);
criterion_main!(benches);
