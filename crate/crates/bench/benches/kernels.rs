use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use regilap_core::constitutive::{invert_map, jacobian_a, map_f_eps, ModelParams, Vector};
use regilap_core::grid::{divergence, gradient, PeriodicGrid, ScalarField};
use regilap_core::solver::{initial_flux, step_implicit, SolverConfig, State};

fn points(count: usize) -> Vec<Vector> {
    (0..count)
        .map(|k| {
            let t = k as f64 / count as f64;
            let r = 10f64.powf(-3.0 + 6.0 * t);
            Vector::new2(r * (7.0 * t).cos(), r * (7.0 * t).sin())
        })
        .collect()
}

fn constitutive(c: &mut Criterion) {
    let qs = points(1024);
    let ys: Vec<Vector> = qs.iter().map(|q| map_f_eps(q, 1.0, 1e-3)).collect();
    let mut g = c.benchmark_group("constitutive");
    g.bench_function("map_f_eps x1024", |b| {
        b.iter(|| {
            qs.iter()
                .map(|q| map_f_eps(black_box(q), 1.0, 1e-3)[0])
                .sum::<f64>()
        })
    });
    g.bench_function("jacobian_a x1024", |b| {
        b.iter(|| {
            qs.iter()
                .map(|q| jacobian_a(black_box(q), 1.0).radial_eigenvalue())
                .sum::<f64>()
        })
    });
    for eps in [1e-1, 1e-3] {
        g.bench_with_input(
            BenchmarkId::new("invert_map x1024", eps),
            &eps,
            |b, &eps| {
                b.iter(|| {
                    ys.iter()
                        .map(|y| invert_map(black_box(y), 1.0, eps).map_or(0.0, |q| q[0]))
                        .sum::<f64>()
                })
            },
        );
    }
    g.finish();
}

fn smooth(grid: PeriodicGrid) -> ScalarField {
    ScalarField::from_fn(grid, |x| {
        0.1 * (2.0 * PI * x[0]).sin()
            * (2.0 * PI * x.as_slice().get(1).copied().unwrap_or(0.0)).cos()
    })
}

fn operators(c: &mut Criterion) {
    let mut g = c.benchmark_group("grid");
    for n in [64, 256] {
        let grid = PeriodicGrid::uniform(2, n, 1.0).unwrap();
        let u = smooth(grid);
        let q = gradient(&u);
        g.bench_with_input(BenchmarkId::new("gradient 2d", n), &u, |b, u| {
            b.iter(|| gradient(black_box(u)))
        });
        g.bench_with_input(BenchmarkId::new("divergence 2d", n), &q, |b, q| {
            b.iter(|| divergence(black_box(q)))
        });
    }
    g.finish();
}

fn implicit_step(c: &mut Criterion) {
    let mut g = c.benchmark_group("solver");
    g.sample_size(20);
    for (d, n) in [(1, 256), (2, 32), (2, 64)] {
        let params = ModelParams {
            a: 1.0,
            epsilon: 1e-2,
            d,
            length: 1.0,
            u_bound: 0.5,
        };
        let grid = PeriodicGrid::uniform(d, n, 1.0).unwrap();
        let u = smooth(grid);
        let state = State {
            t: 0.0,
            q: initial_flux(&u, &params).unwrap(),
            u,
        };
        let forcing = ScalarField::zeros(grid);
        let config = SolverConfig {
            dt: 1e-3,
            ..Default::default()
        };
        g.bench_function(
            BenchmarkId::new("implicit step", format!("d{d} n{n}")),
            |b| b.iter(|| step_implicit(black_box(&state), &forcing, &params, &config).unwrap()),
        );
    }
    g.finish();
}

criterion_group!(benches, constitutive, operators, implicit_step);
criterion_main!(benches);
