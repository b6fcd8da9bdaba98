use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use sfl_bench::{bump, gamma_third, unit_coefficient, unit_grid};
use sfl_core::{
    derive_datum, integrate_graded, solve_ivp, solve_regularized_bvp, weak_solution_report,
    BvpSettings, CellFn, LadderSettings,
};

fn bench_singular_ivp(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_ivp_singular");
    for n in [512usize, 2048] {
        let grid = unit_grid(n);
        let a = unit_coefficient(&grid);
        let h = CellFn::constant(grid, 0.0);
        let phi = gamma_third();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| {
                black_box(solve_ivp(&a, &h, &phi, &LadderSettings::default()).unwrap());
            })
        });
    }
    group.finish();
}

fn bench_regularized_scan(c: &mut Criterion) {
    let grid = unit_grid(512);
    let a = unit_coefficient(&grid);
    let g = CellFn::sample(grid, |x| 1.0 - 2.0 * x).unwrap();
    let phi_n = gamma_third().truncate(20.0).unwrap();
    c.bench_function("solve_regularized_bvp_512", |b| {
        b.iter(|| {
            black_box(
                solve_regularized_bvp(&a, &g, &phi_n, &BvpSettings::default()).unwrap(),
            );
        })
    });
}

fn bench_verification(c: &mut Criterion) {
    let grid = unit_grid(2048);
    let a = unit_coefficient(&grid);
    let u = bump(&grid);
    let phi = gamma_third();
    let g = derive_datum(&a, &u, &phi, 0.0).unwrap();
    c.bench_function("weak_solution_report_2048", |b| {
        b.iter(|| {
            black_box(weak_solution_report(&a, &u, &g, &phi).unwrap());
        })
    });
}

fn bench_graded_quadrature(c: &mut Criterion) {
    c.bench_function("graded_quadrature_inverse_cuberoot", |b| {
        b.iter(|| {
            black_box(
                integrate_graded(
                    |x: f64| x.powf(-1.0 / 3.0),
                    0.0,
                    1.0,
                    sfl_core::quad::Graded::Left,
                )
                .unwrap(),
            );
        })
    });
}

criterion_group!(
    benches,
    bench_singular_ivp,
    bench_regularized_scan,
    bench_verification,
    bench_graded_quadrature
);
criterion_main!(benches);
