use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;
use vgfit_core::{
    build_tables, cdf_from_cf, frft, invert_cf, loglik_score_info, CharacteristicFunction, FrftPlan, GridSpec,
    NormalParams, VgParams,
};

fn bench_frft(c: &mut Criterion) {
    let mut group = c.benchmark_group("frft");
    for n in [256usize, 2048, 16384] {
        let x: Vec<Complex64> = (0..n).map(|j| Complex64::new((j as f64).sin(), (j as f64).cos())).collect();
        group.bench_with_input(BenchmarkId::new("one_shot", n), &x, |b, x| {
            b.iter(|| frft(black_box(x), 0.37 / n as f64).unwrap())
        });
        let plan = FrftPlan::new(n, 0.37 / n as f64).unwrap();
        group.bench_with_input(BenchmarkId::new("planned", n), &x, |b, x| b.iter(|| plan.apply(black_box(x)).unwrap()));
    }
    group.finish();
}

fn bench_inversion(c: &mut Criterion) {
    let grid = GridSpec::default();
    let normal = NormalParams::new(-2.0, 1.0).unwrap();
    let vg = VgParams::new(0.0652, 0.0, 0.9939, 0.877, 0.9937).unwrap();
    c.bench_function("invert_cf normal", |b| b.iter(|| invert_cf(|t| normal.cf(t), black_box(&grid)).unwrap()));
    c.bench_function("cdf_from_cf vg", |b| b.iter(|| cdf_from_cf(&vg, black_box(&grid)).unwrap()));
    c.bench_function("build_tables order 2", |b| b.iter(|| build_tables(black_box(&vg), &grid, 2).unwrap()));
}

fn bench_likelihood(c: &mut Criterion) {
    let grid = GridSpec::default();
    let vg = VgParams::new(0.05, -0.1, 1.0, 0.9, 1.0).unwrap();
    let sample = vg.sample_n(&mut ChaCha8Rng::seed_from_u64(1), 2755);
    c.bench_function("loglik_score_info n=2755", |b| {
        b.iter(|| loglik_score_info(black_box(&sample), &vg, &grid).unwrap())
    });
}

criterion_group!(benches, bench_frft, bench_inversion, bench_likelihood);
criterion_main!(benches);
