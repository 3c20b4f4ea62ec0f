use criterion::{criterion_group, criterion_main, Criterion};
use qpcocycle::cocycle::{amo_potential, line_products};
use qpcocycle::conjugacy::{cohom_solve, minimizer};
use qpcocycle::hyperbolicity::{uh_certificate_with, UhConfig};
use qpcocycle::lyapunov::finite_le;
use qpcocycle::schrodinger::{ids, IdsMethod};
use qpcocycle::{Cocycle, FourierMap, Frequency, ProjPoint, C64};
use std::hint::black_box;

fn amo(lambda: f64, energy: f64) -> Cocycle {
    Cocycle::schrodinger(Frequency::golden(64), energy, &amo_potential(lambda, 0.5)).unwrap()
}

fn products(c: &mut Criterion) {
    let co = amo(2.0, 0.3);
    c.bench_function("line_products n=1024 grid=256", |b| {
        b.iter(|| line_products(black_box(&co), 1024, 0.05, 256).unwrap())
    });
    c.bench_function("finite_le n=4096 grid=256", |b| {
        b.iter(|| finite_le(black_box(&co), 4096, 0.0, 256).unwrap())
    });
}

fn certificates(c: &mut Criterion) {
    let co = amo(0.5, -4.0);
    let cfg = UhConfig {
        grid: 256,
        ..UhConfig::default()
    };
    c.bench_function("uh_certificate gap energy grid=256", |b| {
        b.iter(|| uh_certificate_with(black_box(&co), 0.0, &cfg))
    });
}

fn algebra(c: &mut Criterion) {
    let x = ProjPoint::from_chart(C64::new(0.3, 0.7));
    let y = ProjPoint::from_chart(C64::new(-1.2, -0.1));
    c.bench_function("minimizer", |b| {
        b.iter(|| minimizer(black_box(&x), black_box(&y)).unwrap())
    });
    let phi = FourierMap::real_trig(0.1, &[0.5, 0.25, 0.125, 0.0625], &[0.3], 0.1);
    let g = Frequency::golden(64);
    c.bench_function("cohom_solve K=32", |b| {
        b.iter(|| cohom_solve(black_box(&phi), &g, 32, 1e-8, 1e-10).unwrap())
    });
}

fn spectra(c: &mut Criterion) {
    let g = Frequency::golden(64);
    let v = amo_potential(1.0, 0.5);
    c.bench_function("ids rotation 1e5 steps", |b| {
        b.iter(|| ids(&g, &v, black_box(0.4), IdsMethod::Rotation, 100_000).unwrap())
    });
    c.bench_function("ids eigencount size 2000", |b| {
        b.iter(|| ids(&g, &v, black_box(0.4), IdsMethod::Eigencount, 2000).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = products, certificates, algebra, spectra
}
criterion_main!(benches);
