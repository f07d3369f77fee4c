use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nsforce::lp::{besov_norm, BesovIndex, DyadicPartition};
use nsforce::{random, spectral, Grid, SpectralField};

fn velocity(grid: &Grid) -> SpectralField {
    random::solenoidal(grid, 6.0, &mut random::rng(1))
}

fn fft(c: &mut Criterion) {
    let grid = Grid::new(3, 32, 4.0 * std::f64::consts::PI).unwrap();
    let u = velocity(&grid);
    c.bench_function("fft_round_trip_32^3x3", |b| {
        b.iter(|| SpectralField::from_physical(&grid, &black_box(&u).to_physical()).unwrap())
    });
}

fn nonlinear(c: &mut Criterion) {
    let grid = Grid::new(3, 32, 4.0 * std::f64::consts::PI).unwrap();
    let u = velocity(&grid);
    c.bench_function("nonlinear_term_32^3", |b| b.iter(|| spectral::nonlinear_self(black_box(&u)).unwrap()));
}

fn besov(c: &mut Criterion) {
    let grid = Grid::new(3, 32, 4.0 * std::f64::consts::PI).unwrap();
    let u = velocity(&grid);
    let part = DyadicPartition::for_grid(&grid);
    let idx = BesovIndex::new(-0.25, 4.0, 2.0).unwrap();
    c.bench_function("besov_norm_32^3_p4", |b| b.iter(|| besov_norm(black_box(&u), &part, idx).unwrap()));
}

criterion_group! {
    name = kernels;
    config = Criterion::default().sample_size(10);
    targets = fft, nonlinear, besov
}
criterion_main!(kernels);
