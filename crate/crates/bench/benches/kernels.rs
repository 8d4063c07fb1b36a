use std::hint::black_box;

use absorption_bench::{bump, grid, log_power};
use absorption_core::parabolic::{discrete_profile, evolve, Boundary};
use absorption_core::scalar_ode::{ln_phi_infinity, solve_phi_log};
use absorption_core::stationary::{apriori_bound_log, shoot_v, uniform_radii};
use absorption_core::threshold::{erfc, t_star};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn scalar(c: &mut Criterion) {
    let spec = log_power(1.5);
    let mut g = c.benchmark_group("scalar");
    g.bench_function("h_of_log1p", |b| b.iter(|| spec.h_of_log1p(black_box(12.5))));
    g.bench_function("solve_phi_log", |b| b.iter(|| solve_phi_log(&spec, black_box(30.0), 0.5).unwrap()));
    g.bench_function("ln_phi_infinity", |b| b.iter(|| ln_phi_infinity(&spec, black_box(0.5)).unwrap()));
    g.bench_function("erfc", |b| b.iter(|| erfc(black_box(3.7))));
    g.bench_function("t_star", |b| b.iter(|| t_star(0.0, black_box(20.0), 3.2e5, 1.5, 1).unwrap()));
    g.bench_function("apriori_bound_log", |b| b.iter(|| apriori_bound_log(&spec, black_box(1.0), 4.0).unwrap()));
    g.finish();
}

fn stationary(c: &mut Criterion) {
    let spec = log_power(1.5);
    let mut g = c.benchmark_group("stationary");
    for r_max in [4.0, 10.0] {
        let radii = uniform_radii(r_max, 400);
        g.bench_with_input(BenchmarkId::new("shoot_v", r_max), &radii, |b, radii| {
            b.iter(|| shoot_v(&spec, 1.0, 3, radii).unwrap())
        });
    }
    let grid = grid(10.0, 200, 1);
    g.bench_function("discrete_profile", |b| b.iter(|| discrete_profile(&spec, &grid, black_box(1.0)).unwrap()));
    g.finish();
}

fn parabolic(c: &mut Criterion) {
    let spec = log_power(1.5);
    let mut g = c.benchmark_group("parabolic");
    g.sample_size(10);
    for intervals in [40, 160] {
        let grid = grid(4.0, intervals, 1);
        let data = bump(&grid, 20.0);
        g.bench_with_input(BenchmarkId::new("evolve", intervals), &intervals, |b, _| {
            b.iter(|| evolve(&spec, &grid, &data, &Boundary::zero(), &[0.0, 0.01]).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, scalar, stationary, parabolic);
criterion_main!(benches);
