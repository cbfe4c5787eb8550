use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use wavestab::continuation::{critical_mu, newton_solve, NewtonSettings};
use wavestab::linalg::symmetric_eigen;
use wavestab::stability::assemble_transformed_operator;
use wavestab::wave::residual_jacobian;
use wavestab::{SpectralFunction, WaveParameters, WaveState};

/// Smooth test function with algebraically decaying coefficients.
fn smooth(order: usize, phase: f64) -> SpectralFunction {
    let cos: Vec<f64> = (1..=order)
        .map(|j| (j as f64 + phase).sin() / (j * j) as f64)
        .collect();
    let sin: Vec<f64> = (1..=order)
        .map(|j| (j as f64 * phase).cos() / (j * j) as f64)
        .collect();
    SpectralFunction::from_cos_sin(&cos, &sin, order)
}

fn branch_state(order: usize, eps: f64) -> WaveState {
    let params = WaveParameters::default().with_mu(critical_mu(1, 1.0, 1.0).unwrap());
    let init = WaveState::trivial(params, order).unwrap();
    newton_solve(&init, 1, eps, NewtonSettings::default())
        .unwrap()
        .state
}

fn spectral(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectral");
    for order in [32, 128, 512] {
        let f = smooth(order, 0.3);
        let g = smooth(order, 1.7);
        group.bench_with_input(BenchmarkId::new("multiply", order), &order, |b, _| {
            b.iter(|| black_box(&f).multiply(black_box(&g)))
        });
        group.bench_with_input(BenchmarkId::new("strip_hilbert", order), &order, |b, _| {
            b.iter(|| black_box(&f).apply_strip_hilbert(1.0).unwrap())
        });
    }
    group.finish();
}

fn solver(c: &mut Criterion) {
    let mut group = c.benchmark_group("solver");
    group.sample_size(10);
    for order in [64, 128] {
        let state = branch_state(order, 0.02);
        let u = smooth(order, 0.9);
        group.bench_with_input(
            BenchmarkId::new("residual_jacobian", order),
            &order,
            |b, _| b.iter(|| residual_jacobian(black_box(&state), black_box(&u))),
        );
        let params = state.params;
        group.bench_with_input(BenchmarkId::new("newton_solve", order), &order, |b, _| {
            b.iter(|| {
                let init = WaveState::trivial(params, order).unwrap();
                newton_solve(&init, 1, black_box(0.02), NewtonSettings::default()).unwrap()
            })
        });
    }
    group.finish();
}

fn stability(c: &mut Criterion) {
    let mut group = c.benchmark_group("stability");
    group.sample_size(10);
    for order in [32, 64, 128] {
        let state = branch_state(order, 0.01);
        group.bench_with_input(
            BenchmarkId::new("assemble_transformed", order),
            &order,
            |b, _| b.iter(|| assemble_transformed_operator(black_box(&state)).unwrap()),
        );
        let matrix = assemble_transformed_operator(&state).unwrap();
        group.bench_with_input(
            BenchmarkId::new("symmetric_eigen", order),
            &order,
            |b, _| b.iter(|| symmetric_eigen(black_box(&matrix)).unwrap()),
        );
    }
    group.finish();
}

criterion_group!(benches, spectral, solver, stability);
criterion_main!(benches);
