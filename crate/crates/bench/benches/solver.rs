use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ctc_core::dctc::{lazy_fixed_point, max_entropy_fixed_point};
use ctc_core::random::random_channel;
use ctc_core::{dctc_apply, pctc_apply, scenarios, DensityMatrix};

fn fixed_points(c: &mut Criterion) {
    let mut group = c.benchmark_group("fixed_point");
    for d in [2usize, 4, 8] {
        let t = random_channel(vec![d], vec![d], d as u64);
        group.bench_with_input(BenchmarkId::new("lazy", d), &t, |b, t| b.iter(|| lazy_fixed_point(black_box(t))));
        group.bench_with_input(BenchmarkId::new("max_entropy", d), &t, |b, t| {
            b.iter(|| max_entropy_fixed_point(black_box(t)))
        });
    }
    group.finish();
}

fn loops(c: &mut Criterion) {
    let e = scenarios::grandfather_morphism();
    let rho = DensityMatrix::qubit_plus();
    c.bench_function("grandfather/dctc", |b| b.iter(|| dctc_apply(black_box(&e), black_box(&rho))));
    c.bench_function("grandfather/pctc", |b| b.iter(|| pctc_apply(black_box(e.phi()), e.cv_dims(), black_box(&rho))));
    let d = scenarios::discrimination_morphism();
    c.bench_function("discrimination/dctc", |b| b.iter(|| dctc_apply(black_box(&d), black_box(&rho))));
}

criterion_group!(benches, fixed_points, loops);
criterion_main!(benches);
