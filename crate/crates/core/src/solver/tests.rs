use super::*;
use crate::diagnostics::{energy_ledger_check, LedgerFailure};
use crate::scenario::{
    scenario_manufactured, scenario_poiseuille, scenario_random_smooth, scenario_zero,
    AmplitudeKind, AmplitudeProfile, ForcingMode, PressureDrop,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn params(d: usize, a: f64, eps: f64) -> ModelParams {
    ModelParams {
        a,
        epsilon: eps,
        d,
        length: 1.0,
        u_bound: 0.5,
    }
}

fn config(dt: f64, t_end: f64) -> SolverConfig {
    SolverConfig {
        dt,
        t_end,
        ..Default::default()
    }
}

fn state_from(u: ScalarField, p: &ModelParams) -> State {
    let q = initial_flux(&u, p).unwrap();
    State { t: 0.0, u, q }
}

fn manufactured_error(
    p: &ModelParams,
    prof: AmplitudeProfile,
    n: usize,
    dt: f64,
    t_end: f64,
) -> f64 {
    let s = scenario_manufactured(p, prof).unwrap();
    let grid = PeriodicGrid::uniform(p.d, n, p.length).unwrap();
    let cfg = SolverConfig {
        record_every: usize::MAX,
        ..config(dt, t_end)
    };
    let traj = run(&s, p, &grid, &cfg).unwrap();
    let exact = s.exact(t_end, &grid).unwrap().unwrap();
    traj.final_state().u.add_scaled(-1.0, &exact).l2_norm()
}

fn orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[test]
fn constant_state_is_a_fixed_point() {
    let p = params(2, 1.0, 0.1);
    let grid = PeriodicGrid::uniform(2, 8, 1.0).unwrap();
    let s = state_from(ScalarField::constant(grid, 0.7), &p);
    let g = ScalarField::zeros(grid);
    let next = step_implicit(&s, &g, &p, &config(0.1, 1.0)).unwrap();
    assert_eq!(next.u, s.u);
    assert_eq!(next.q.max_norm(), 0.0);
    let small = config(explicit_dt_bound(&grid, &p), 1.0);
    assert_eq!(step_explicit(&s, &g, &p, &small).unwrap().u, s.u);
}

#[test]
fn uniform_forcing_integrates_exactly() {
    let p = params(1, 0.5, 0.05);
    let grid = PeriodicGrid::uniform(1, 16, 1.0).unwrap();
    let mut s = state_from(ScalarField::zeros(grid), &p);
    let gamma = 1.25;
    let g = ScalarField::constant(grid, gamma);
    for _ in 0..10 {
        s = step_implicit(&s, &g, &p, &config(0.01, 1.0)).unwrap();
        assert_eq!(s.q.max_norm(), 0.0);
    }
    for v in s.u.values() {
        assert!((v - gamma * 0.1).abs() < 1e-14);
    }
}

#[test]
fn implicit_step_rejects_zero_epsilon() {
    let p = params(1, 1.0, 0.0);
    let grid = PeriodicGrid::uniform(1, 8, 1.0).unwrap();
    let s = state_from(ScalarField::zeros(grid), &p);
    let r = step_implicit(&s, &ScalarField::zeros(grid), &p, &config(0.1, 1.0));
    assert!(matches!(r, Err(Error::InvalidParameter(_))));
}

#[test]
fn explicit_step_enforces_stability_bound() {
    let p = params(2, 1.0, 0.1);
    let grid = PeriodicGrid::uniform(2, 16, 1.0).unwrap();
    let bound = explicit_dt_bound(&grid, &p);
    assert!((bound - 0.1 / (16.0 * 16.0 * 4.0)).abs() < 1e-18);
    let s = state_from(ScalarField::zeros(grid), &p);
    let g = ScalarField::zeros(grid);
    assert!(step_explicit(&s, &g, &p, &config(bound, 1.0)).is_ok());
    let err = step_explicit(&s, &g, &p, &config(bound * 1.01, 1.0)).unwrap_err();
    assert!(matches!(err, Error::StabilityViolation { .. }));
}

#[test]
fn initial_flux_examples() {
    let p0 = params(1, 2.0, 0.0);
    let grid = PeriodicGrid::uniform(1, 200, 1.0).unwrap();
    // slope 0.9 sine
    let amp = 0.9 / (2.0 * PI);
    let u0 = ScalarField::from_fn(grid, |x| amp * (2.0 * PI * x[0]).sin());
    let top = gradient(&u0).max_norm();
    let q0 = initial_flux(&u0, &p0).unwrap();
    let bound = 0.9 / (1.0f64 - 0.81).sqrt();
    assert!((bound - 2.06474).abs() < 1e-5);
    assert!(q0.max_norm() <= top / (1.0 - top * top).sqrt() * (1.0 + 1e-12));
    assert!(q0.max_norm() <= bound);

    assert_eq!(
        initial_flux(&ScalarField::constant(grid, 3.0), &p0)
            .unwrap()
            .max_norm(),
        0.0
    );

    let h = grid.h(0);
    let ramp = ScalarField::from_fn(grid, |x| if x[0] < 2.0 * h { x[0] } else { 0.0 });
    assert!(matches!(
        initial_flux(&ramp, &p0),
        Err(Error::DomainExceeded { .. })
    ));
}

#[test]
fn frozen_zero_flux_operator_matches_fourier_solve() {
    // J = I − Δt/(1+ε) Δ_h is diagonal in the discrete Fourier basis
    let eps = 0.05;
    let dt = 2e-3;
    let p = params(2, 1.0, eps);
    let grid = PeriodicGrid::new(&[8, 6], 1.0).unwrap();
    let lin = Linearization::at_flux(&VectorField::zeros(grid), &p, dt);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let b: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let rhs = ScalarField::from_values(grid, b.clone()).unwrap();
    let sol = newton_inner_solve(&lin, &rhs, 1e-14).unwrap();

    // direct O(N²) DFT oracle
    let (n0, n1) = (grid.n(0), grid.n(1));
    let (h0, h1) = (grid.h(0), grid.h(1));
    let mut x = vec![0.0; grid.len()];
    for k0 in 0..n0 {
        for k1 in 0..n1 {
            let (mut re, mut im) = (0.0, 0.0);
            for i in 0..grid.len() {
                let [j0, j1] = grid.multi_index(i);
                let ph = -2.0
                    * PI
                    * (k0 as f64 * j0 as f64 / n0 as f64 + k1 as f64 * j1 as f64 / n1 as f64);
                re += b[i] * ph.cos();
                im += b[i] * ph.sin();
            }
            let lam = 4.0 / (h0 * h0) * (PI * k0 as f64 / n0 as f64).sin().powi(2)
                + 4.0 / (h1 * h1) * (PI * k1 as f64 / n1 as f64).sin().powi(2);
            let denom = 1.0 + dt / (1.0 + eps) * lam;
            let (re, im) = (re / denom, im / denom);
            for i in 0..grid.len() {
                let [j0, j1] = grid.multi_index(i);
                let ph = 2.0
                    * PI
                    * (k0 as f64 * j0 as f64 / n0 as f64 + k1 as f64 * j1 as f64 / n1 as f64);
                x[i] += (re * ph.cos() - im * ph.sin()) / grid.len() as f64;
            }
        }
    }
    for (got, want) in sol.solution.values().iter().zip(&x) {
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }
}

#[test]
fn newton_converges_quadratically() {
    let p = params(1, 1.0, 1e-2);
    let prof = AmplitudeProfile {
        a0: 0.1,
        rate: 1.0,
        ..Default::default()
    };
    let s = scenario_manufactured(&p, prof).unwrap();
    let grid = PeriodicGrid::uniform(1, 64, 1.0).unwrap();
    let cfg = SolverConfig {
        newton_tol: 1e-12,
        ..config(0.05, 1.0)
    };
    let state = state_from(s.initial(&grid).unwrap(), &p);
    let g = s.forcing(0.05, &grid).unwrap();
    let (next, trace) = step_implicit_traced(&state, &g, &p, &cfg, 0.05).unwrap();
    assert!(next.u.is_finite());
    let r = &trace.residuals;
    assert!(r.len() >= 3, "{r:?}");
    assert!(r.windows(2).all(|w| w[1] < w[0]));
    // near the root r_{k+1} ≤ C r_k² until rounding takes over
    let floor = 1e-13 * state.u.l2_norm();
    let mut checked = 0;
    for w in r.windows(2) {
        if w[0] < 1e-2 && w[1] > floor {
            assert!(w[1] / (w[0] * w[0]) < 1e3, "{r:?}");
            checked += 1;
        }
    }
    assert!(checked >= 1, "{r:?}");
    assert!(trace.damping.iter().all(|&l| l == 1.0));
}

#[test]
fn manufactured_spatial_order_1d() {
    let p = params(1, 1.0, 1e-2);
    let prof = AmplitudeProfile {
        a0: 0.1,
        rate: 1.0,
        horizon: 0.2,
        ..Default::default()
    };
    let errs: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&n| manufactured_error(&p, prof, n, 0.02, 0.2))
        .collect();
    for o in orders(&errs) {
        assert!((1.7..=2.3).contains(&o), "{errs:?}");
    }
}

#[test]
fn manufactured_temporal_order_1d() {
    let p = params(1, 1.0, 1e-2);
    let prof = AmplitudeProfile {
        kind: AmplitudeKind::Exponential,
        a0: 0.1,
        rate: -2.0,
        horizon: 0.5,
        forcing: ForcingMode::SemiDiscrete,
    };
    let errs: Vec<f64> = [0.05, 0.025, 0.0125]
        .iter()
        .map(|&dt| manufactured_error(&p, prof, 64, dt, 0.5))
        .collect();
    for o in orders(&errs) {
        assert!((0.8..=1.2).contains(&o), "{errs:?}");
    }
}

#[test]
fn manufactured_2d_small_amplitude_is_second_order() {
    let p = params(2, 1.0, 1e-2);
    let prof = AmplitudeProfile {
        a0: 0.002,
        rate: 1.0,
        horizon: 0.1,
        ..Default::default()
    };
    let errs: Vec<f64> = [16, 32, 64]
        .iter()
        .map(|&n| manufactured_error(&p, prof, n, 0.02, 0.1))
        .collect();
    for o in orders(&errs) {
        assert!((1.7..=2.3).contains(&o), "{errs:?}");
    }
}

#[test]
fn manufactured_2d_finite_amplitude_converges() {
    // the collocated flux Q(∇_h u) mixes the half-cell positions of the two
    // forward differences, which costs one order once Q is visibly nonlinear
    let p = params(2, 1.0, 1e-2);
    let prof = AmplitudeProfile {
        a0: 0.1,
        rate: 1.0,
        horizon: 0.1,
        ..Default::default()
    };
    let errs: Vec<f64> = [16, 32, 64]
        .iter()
        .map(|&n| manufactured_error(&p, prof, n, 0.02, 0.1))
        .collect();
    for o in orders(&errs) {
        assert!(o >= 0.9, "{errs:?}");
    }
}

#[test]
fn explicit_and_implicit_agree_to_first_order() {
    let p = params(1, 1.0, 0.2);
    let prof = AmplitudeProfile {
        kind: AmplitudeKind::Exponential,
        a0: 0.1,
        rate: -1.0,
        horizon: 0.02,
        forcing: ForcingMode::SemiDiscrete,
    };
    let s = scenario_manufactured(&p, prof).unwrap();
    let grid = PeriodicGrid::uniform(1, 16, 1.0).unwrap();
    let bound = explicit_dt_bound(&grid, &p);
    let mut gaps = Vec::new();
    for k in 0..3 {
        let dt = 0.02 / (2f64.powi(k) * (0.02 / bound).ceil());
        let run_with = |scheme| {
            let cfg = SolverConfig {
                scheme,
                record_every: usize::MAX,
                ..config(dt, 0.02)
            };
            run(&s, &p, &grid, &cfg).unwrap().final_state().u.clone()
        };
        let gap = run_with(Scheme::Implicit)
            .add_scaled(-1.0, &run_with(Scheme::Explicit))
            .l2_norm();
        gaps.push(gap);
    }
    for o in orders(&gaps) {
        assert!((0.8..=1.2).contains(&o), "{gaps:?}");
    }
}

#[test]
fn l2_contraction_between_trajectories() {
    let p = params(2, 0.7, 0.05);
    let grid = PeriodicGrid::uniform(2, 16, 1.0).unwrap();
    let s1 = scenario_random_smooth(&p, 1, 0.9, 0.5).unwrap();
    let s2 = scenario_random_smooth(&p, 2, 0.6, 0.5).unwrap();
    let cfg = config(0.01, 0.1);
    let mut a = state_from(s1.initial(&grid).unwrap(), &p);
    let mut b = state_from(s2.initial(&grid).unwrap(), &p);
    let g = s1.forcing(0.0, &grid).unwrap();
    let mut gap = a.u.add_scaled(-1.0, &b.u).l2_norm();
    for _ in 0..10 {
        a = step_implicit(&a, &g, &p, &cfg).unwrap();
        b = step_implicit(&b, &g, &p, &cfg).unwrap();
        let next = a.u.add_scaled(-1.0, &b.u).l2_norm();
        assert!(next <= gap * (1.0 + 1e-10), "{next} > {gap}");
        gap = next;
    }
}

#[test]
fn unforced_run_satisfies_energy_ledger() {
    let p = params(2, 1.0, 0.02);
    let grid = PeriodicGrid::uniform(2, 16, 1.0).unwrap();
    let s = scenario_random_smooth(&p, 7, 0.99, 0.0).unwrap();
    let mut traj = run(&s, &p, &grid, &config(0.005, 0.05)).unwrap();
    let report = energy_ledger_check(&traj, &p);
    assert!(report.passed(), "{report:?}");
    assert!(report.l2_monotone);

    for snap in &traj.snapshots {
        let st = &snap.state;
        assert!(st.constitutive_defect(&p) <= traj.config.newton_tol * (1.0 + st.q.max_norm()));
        let top = gradient(&st.u).max_norm();
        assert!(top <= 1.0 + p.epsilon * st.q.max_norm() + traj.config.newton_tol);
    }

    // a corrupted stored state is caught
    let k = traj.snapshots.len() / 2;
    let doubled = traj.snapshots[k].state.u.scale(2.0);
    traj.snapshots[k].state.u = doubled;
    let bad = energy_ledger_check(&traj, &p);
    assert!(!bad.passed());
    assert!(bad
        .failures()
        .any(|e| e.failure == Some(LedgerFailure::StateMismatch)));
}

#[test]
fn forced_run_satisfies_energy_ledger() {
    let p = params(1, 1.0, 1e-2);
    let prof = AmplitudeProfile {
        a0: 0.1,
        rate: 1.0,
        horizon: 0.2,
        ..Default::default()
    };
    let s = scenario_manufactured(&p, prof).unwrap();
    let grid = PeriodicGrid::uniform(1, 64, 1.0).unwrap();
    let traj = run(&s, &p, &grid, &config(0.01, 0.2)).unwrap();
    let report = energy_ledger_check(&traj, &p);
    assert!(report.passed(), "{report:?}");
    assert!(report.entries.iter().all(|e| e.rhs >= e.lhs));
}

#[test]
fn zero_data_gives_zero_trajectory() {
    let p = params(2, 1.0, 0.1);
    let grid = PeriodicGrid::uniform(2, 8, 1.0).unwrap();
    let traj = run(&scenario_zero(&p), &p, &grid, &config(0.1, 0.5)).unwrap();
    assert_eq!(traj.snapshots.len(), 6);
    for snap in &traj.snapshots {
        assert_eq!(snap.state.u.max_abs(), 0.0);
        assert_eq!(snap.state.q.max_norm(), 0.0);
    }
    assert_eq!(traj.stats.newton_iterations, 0);
}

#[test]
fn run_records_on_cadence_and_final_step() {
    let p = params(1, 1.0, 0.1);
    let grid = PeriodicGrid::uniform(1, 16, 1.0).unwrap();
    let s = scenario_random_smooth(&p, 3, 0.5, 1.0).unwrap();
    let cfg = SolverConfig {
        record_every: 3,
        ..config(0.01, 0.1)
    };
    let traj = run(&s, &p, &grid, &cfg).unwrap();
    let steps: Vec<usize> = traj.snapshots.iter().map(|s| s.step).collect();
    assert_eq!(steps, vec![0, 3, 6, 9, 10]);
    assert_eq!(traj.energy.len(), 10);
    assert_eq!(traj.diagnostics.len(), steps.len());
    let times = traj.times();
    assert!(times.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(times[0], 0.0);
    assert_eq!(*times.last().unwrap(), 0.1);
    assert_eq!(traj.snapshots[0].state.u, s.initial(&grid).unwrap());
}

#[test]
fn poiseuille_velocity_is_accumulated_pressure_drop() {
    let p = params(1, 1.0, 0.01);
    let grid = PeriodicGrid::uniform(1, 32, 1.0).unwrap();
    let drop = PressureDrop::Step {
        gamma: 2.0,
        t_on: 0.05,
    };
    let s = scenario_poiseuille(&p, drop).unwrap();
    let cfg = config(0.01, 0.3);
    let traj = run(&s, &p, &grid, &cfg).unwrap();
    let mut acc = 0.0;
    for snap in traj.snapshots.iter().skip(1) {
        acc += cfg.dt * drop.eval(snap.state.t);
        assert_eq!(snap.state.q.max_norm(), 0.0);
        for v in snap.state.u.values() {
            assert!((v - acc).abs() < 1e-12);
        }
    }
    // backward Euler reproduces ∫g up to one step of the jump
    let exact = s.exact(0.3, &grid).unwrap().unwrap();
    assert!(traj.final_state().u.add_scaled(-1.0, &exact).max_abs() <= 2.0 * cfg.dt + 1e-12);
    assert!(traj
        .diagnostics
        .iter()
        .all(|d| d.l2_u.is_finite() && d.hess_u == 0.0));
}

#[test]
fn run_rejects_mismatched_dimension() {
    let p = params(2, 1.0, 0.1);
    let grid = PeriodicGrid::uniform(1, 8, 1.0).unwrap();
    let err = run(&scenario_zero(&p), &p, &grid, &config(0.1, 0.2)).unwrap_err();
    assert!(err.is_configuration());
}

#[test]
fn solver_error_carries_time() {
    let p = params(1, 1.0, 1e-3);
    let grid = PeriodicGrid::uniform(1, 64, 1.0).unwrap();
    let s = scenario_random_smooth(&p, 4, 0.99, 50.0).unwrap();
    let cfg = SolverConfig {
        newton_max_iter: 1,
        ..config(1.0, 2.0)
    };
    match run(&s, &p, &grid, &cfg) {
        Err(Error::AtTime { t, source }) => {
            assert_eq!(t, 1.0);
            assert!(matches!(*source, Error::NoConvergence { .. }));
        }
        other => panic!("expected a timed failure, got {other:?}"),
    }
}
