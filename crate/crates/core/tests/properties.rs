//! Randomized invariants of the public API.

use proptest::prelude::*;
use regilap_core::config::{RunConfig, SolverSection, SweepSection};
use regilap_core::constitutive::{invert_map, map_f, map_f_eps, ModelParams, Vector};
use regilap_core::diagnostics::flux_exponent;
use regilap_core::grid::{divergence, gradient, PeriodicGrid, ScalarField, VectorField};
use regilap_core::io::{read_field, write_scalar, write_vector};
use regilap_core::scenario::{
    scenario_random_smooth, AmplitudeKind, AmplitudeProfile, ForcingMode, PressureDrop,
    ScenarioSpec,
};
use regilap_core::solver::Scheme;

fn vector(d: usize) -> impl Strategy<Value = Vector> {
    (-6.0..6.0f64, 0.0..std::f64::consts::TAU).prop_map(move |(lr, th)| {
        let r = 10f64.powf(lr);
        if d == 1 {
            Vector::new1(r * th.cos().signum())
        } else {
            Vector::new2(r * th.cos(), r * th.sin())
        }
    })
}

fn grid() -> impl Strategy<Value = PeriodicGrid> {
    prop_oneof![
        (4usize..40).prop_map(|n| PeriodicGrid::new(&[n], 1.0).unwrap()),
        (4usize..20, 4usize..20, 0.5..3.0f64)
            .prop_map(|(n, m, l)| PeriodicGrid::new(&[n, m], l).unwrap()),
    ]
}

fn fields(g: PeriodicGrid) -> impl Strategy<Value = (ScalarField, VectorField)> {
    let len = g.len();
    let d = g.dim();
    (
        prop::collection::vec(-1.0..1.0f64, len),
        prop::collection::vec(prop::collection::vec(-1.0..1.0f64, len), d),
    )
        .prop_map(move |(u, q)| {
            (
                ScalarField::from_values(g, u).unwrap(),
                VectorField::from_components(g, q).unwrap(),
            )
        })
}

proptest! {
    #[test]
    fn inversion_roundtrip(y in vector(2), a in 0.3..5.0f64, le in -4.0..0.0f64) {
        let eps = 10f64.powf(le);
        let q = invert_map(&y, a, eps).unwrap();
        prop_assert!((map_f_eps(&q, a, eps) - y).norm() <= 1e-10 * (1.0 + y.norm()));
    }

    #[test]
    fn strong_monotonicity(q1 in vector(2), q2 in vector(2), a in 0.2..5.0f64, le in -4.0..0.0f64) {
        prop_assume!(q1 != q2);
        let eps = 10f64.powf(le);
        let d = q1 - q2;
        let (g1, g2) = (map_f_eps(&q1, a, eps), map_f_eps(&q2, a, eps));
        let lhs = (g1 - g2).dot(&d);
        prop_assert!(lhs >= eps * d.norm_sq() - 1e-12 * (g1.norm() + g2.norm()) * d.norm());
    }

    #[test]
    fn range_is_unit_ball(q in vector(2), a in 0.2..5.0f64) {
        // |f(q)| rounds to 1 once (1+|q|^a)^(1/a) is within an ulp of |q|
        let r = map_f(&q, a).norm();
        prop_assert!(r <= 1.0 + 2.0 * f64::EPSILON);
        if q.norm() <= 1e2 {
            prop_assert!(r < 1.0);
        }
    }

    #[test]
    fn gradient_and_divergence_are_adjoint((u, v) in grid().prop_flat_map(fields)) {
        let gu = gradient(&u);
        let lhs = gu.inner(&v);
        let rhs = -u.inner(&divergence(&v));
        prop_assert!((lhs - rhs).abs() <= 1e-13 * (gu.l2_norm() * v.l2_norm()).max(f64::MIN_POSITIVE));
    }

    #[test]
    fn shifts_commute_with_operators((u, v) in grid().prop_flat_map(fields), axis in 0usize..2) {
        let axis = axis % u.grid().dim();
        prop_assert_eq!(gradient(&u.shifted(axis)), gradient(&u).shifted(axis));
        prop_assert_eq!(divergence(&v.shifted(axis)), divergence(&v).shifted(axis));
    }

    #[test]
    fn snapshots_round_trip_bit_exactly((u, v) in grid().prop_flat_map(fields), t in 0.0..10.0f64) {
        let mut buf = Vec::new();
        write_scalar(&mut buf, &u, t).unwrap();
        let back = read_field(buf.as_slice()).unwrap();
        prop_assert_eq!(back.t.to_bits(), t.to_bits());
        prop_assert_eq!(back.into_scalar().unwrap(), u);
        let mut buf = Vec::new();
        write_vector(&mut buf, &v, t).unwrap();
        prop_assert_eq!(read_field(buf.as_slice()).unwrap().into_vector().unwrap(), v);
    }

    #[test]
    fn random_smooth_meets_declared_slope(seed in any::<u64>(), u in 0.01..0.99f64, d in 1usize..=2, n in 8usize..33) {
        let p = ModelParams { d, ..Default::default() };
        let grid = PeriodicGrid::uniform(d, n, 1.0).unwrap();
        let s = scenario_random_smooth(&p, seed, u, 0.3).unwrap();
        let u0 = s.initial(&grid).unwrap();
        prop_assert!((gradient(&u0).max_norm() - u).abs() <= 1e-12);
        prop_assert_eq!(s.initial(&grid).unwrap(), u0);
    }

    #[test]
    fn exponent_flag_matches_threshold(a in 0.01..2.0f64, d in 1usize..=2) {
        let p = ModelParams { a, d, ..Default::default() };
        prop_assert_eq!(flux_exponent(&p, None).valid, a < 2.0 / (d as f64 + 1.0));
    }

    #[test]
    fn config_round_trips(cfg in run_config()) {
        let text = cfg.to_toml_string().unwrap();
        let back = RunConfig::from_toml_str(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_toml_string().unwrap(), text);
    }
}

fn scenario_spec() -> impl Strategy<Value = ScenarioSpec> {
    prop_oneof![
        Just(ScenarioSpec::Zero),
        // TOML integers are signed 64-bit
        (0..=i64::MAX as u64, 0.0..2.0f64).prop_map(|(seed, forcing_amplitude)| {
            ScenarioSpec::RandomSmooth {
                seed,
                forcing_amplitude,
            }
        }),
        (-3.0..3.0f64, 0.0..1.0f64, 0.0..20.0f64, 0usize..3).prop_map(|(gamma, t_on, omega, k)| {
            let drop = match k {
                0 => PressureDrop::Constant { gamma },
                1 => PressureDrop::Step { gamma, t_on },
                _ => PressureDrop::Sine { gamma, omega },
            };
            ScenarioSpec::Poiseuille { drop }
        }),
        (
            0.0..0.2f64,
            -3.0..3.0f64,
            0.1..2.0f64,
            any::<bool>(),
            any::<bool>()
        )
            .prop_map(
                |(a0, rate, horizon, exp, semi)| ScenarioSpec::Manufactured {
                    profile: AmplitudeProfile {
                        kind: if exp {
                            AmplitudeKind::Exponential
                        } else {
                            AmplitudeKind::Linear
                        },
                        a0,
                        rate,
                        horizon,
                        forcing: if semi {
                            ForcingMode::SemiDiscrete
                        } else {
                            ForcingMode::Continuous
                        },
                    },
                }
            ),
    ]
}

fn run_config() -> impl Strategy<Value = RunConfig> {
    (
        scenario_spec(),
        (
            0.1..5.0f64,
            0.0..1.0f64,
            1usize..=2,
            0.5..4.0f64,
            0.0..0.999f64,
        ),
        (
            4usize..512,
            1e-6..0.1f64,
            0.01..2.0f64,
            any::<bool>(),
            1usize..10,
        ),
        (
            prop::option::of(prop::collection::vec(1e-5..1.0f64, 1..6)),
            any::<bool>(),
            prop::option::of(1.0..8.0f64),
        ),
        "[a-z]{1,8}",
    )
        .prop_map(
            |(
                scenario,
                (a, epsilon, d, length, u_bound),
                (n, dt, t_end, explicit, every),
                (eps, probe, b),
                dir,
            )| {
                let mut cfg = RunConfig {
                    scenario,
                    model: ModelParams {
                        a,
                        epsilon,
                        d,
                        length,
                        u_bound,
                    },
                    solver: SolverSection {
                        n,
                        dt,
                        t_end,
                        scheme: if explicit {
                            Scheme::Explicit
                        } else {
                            Scheme::Implicit
                        },
                        record_every: every,
                        ..Default::default()
                    },
                    sweep: SweepSection {
                        epsilons: eps,
                        probe,
                        b,
                        concurrent: !probe,
                    },
                    ..Default::default()
                };
                cfg.output.dir = dir.into();
                cfg
            },
        )
}
