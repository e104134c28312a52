use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use cpcorr_core::energy::{energy_ratio, EnergySettings};
use cpcorr_core::lattice::LatticeSum;
use cpcorr_core::profiles::DimensionlessProfile;
use cpcorr_core::solver::{BlochSettings, BlochSolver, CellGrid, PanelPolicy};
use cpcorr_core::specfun::{bessel_k0, erfcx};

fn special_functions(c: &mut Criterion) {
    c.bench_function("bessel_k0", |b| b.iter(|| bessel_k0(black_box(0.73)).unwrap()));
    c.bench_function("erfcx", |b| b.iter(|| erfcx(black_box(2.4))));
}

fn lattice(c: &mut Criterion) {
    let ewald = LatticeSum::new(0.3, std::f64::consts::PI);
    c.bench_function("lattice_sum_ewald", |b| b.iter(|| ewald.eval(black_box(0.4), 0.7, 0.2, &[])));
    let direct = LatticeSum::new(5.0, std::f64::consts::PI);
    c.bench_function("lattice_sum_direct", |b| b.iter(|| direct.eval(black_box(0.4), 0.7, 0.2, &[])));
}

fn bloch(c: &mut Criterion) {
    let p = DimensionlessProfile::sine(0.5, 2.0, -std::f64::consts::FRAC_PI_2).unwrap();
    let cell = CellGrid::build(&p, &PanelPolicy::default()).unwrap();
    let solver = BlochSolver::new(&p, &cell, BlochSettings::default()).unwrap();
    let mut g = c.benchmark_group("bloch");
    g.sample_size(10);
    g.bench_function("inner_integral_q1", |b| b.iter(|| solver.inner_integral(black_box(1.0)).unwrap()));
    g.finish();
}

fn energy(c: &mut Criterion) {
    let p = DimensionlessProfile::sine(0.1, 20.0, -std::f64::consts::FRAC_PI_2).unwrap();
    let s = EnergySettings { q_nodes: 24, ..EnergySettings::default() };
    let mut g = c.benchmark_group("energy");
    g.sample_size(10);
    g.bench_function("ratio_sine_h10_q24", |b| b.iter(|| energy_ratio(black_box(&p), &s).unwrap()));
    g.finish();
}

criterion_group!(benches, special_functions, lattice, bloch, energy);
criterion_main!(benches);
