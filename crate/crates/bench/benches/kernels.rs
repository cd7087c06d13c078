use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use tfloc_bench::{interval_setup, line_probe, wave_packet};
use tfloc_core::basis::{bourgain_step, Admission, AtomKind, Bump, BumpSpec, CompletionState};
use tfloc_core::functionals::dispersion;
use tfloc_core::hermite::hermite_system;
use tfloc_core::localization::{materialize_q, q_eigenvalues};
use tfloc_core::{fourier_transform, GridSpec};

fn transforms(c: &mut Criterion) {
    let line = wave_packet(&GridSpec::default_1d());
    let square = wave_packet(&GridSpec::default_2d());
    c.bench_function("fft_line_2048", |b| b.iter(|| fourier_transform(black_box(&line)).unwrap()));
    c.bench_function("fft_square_256", |b| b.iter(|| fourier_transform(black_box(&square)).unwrap()));
    c.bench_function("dispersion_line_2048", |b| b.iter(|| dispersion(black_box(&line)).unwrap()));
}

fn hermite(c: &mut Criterion) {
    let grid = GridSpec::default_1d();
    c.bench_function("hermite_system_20", |b| b.iter(|| hermite_system(black_box(20), &grid).unwrap()));
}

fn localization(c: &mut Criterion) {
    let mut g = c.benchmark_group("localization");
    g.sample_size(10);
    g.bench_function("materialize_q_interval", |b| b.iter(|| materialize_q(interval_setup()).unwrap()));
    let q = materialize_q(interval_setup()).unwrap();
    g.bench_function("q_eigenvalues_interval", |b| b.iter(|| q_eigenvalues(black_box(&q)).unwrap()));
    g.finish();
}

fn completion(c: &mut Criterion) {
    let (grid, probe) = line_probe();
    let bump = Arc::new(Bump::new(BumpSpec::default(), 1).unwrap());
    let fresh = || CompletionState::new(&grid, bump.clone(), AtomKind::Plain, Admission::Fixed { p: 0.5 }, 0.5).unwrap();
    let mut g = c.benchmark_group("completion");
    g.sample_size(10);
    g.bench_function("bourgain_step_s2", |b| b.iter(|| bourgain_step(fresh(), black_box(&probe), 2, 0.25).unwrap()));
    g.finish();
}

criterion_group!(benches, transforms, hermite, localization, completion);
criterion_main!(benches);
