//! Runtime property suites behind the `verify` subcommand.
//!
//! Every check returns a [`Check`] instead of panicking, so that one report
//! covers all modules. Sizes are parameters: [`VerifyOptions::quick`] runs in
//! seconds, [`VerifyOptions::full`] at the sizes of the acceptance criteria.

use std::f64::consts::PI;
use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::constitutive::{
    invert_map, jacobian_a, map_f, map_f_eps, radial_f, radial_f_prime, radial_weight, ModelParams,
    TruncationPair, Vector,
};
use crate::continuation::{
    default_epsilons, eps_sweep, integrability_probe, SweepPlan, SweepReport,
};
use crate::diagnostics::{
    energy_ledger_check, flux_exponent, initial_bound_check, initial_flux_bound, plain_weak_defect,
    renormalization_residual, write_ledger, TestFunction,
};
use crate::error::{Error, Result};
use crate::grid::{
    divergence, gradient, laplacian, spectral_project, PeriodicGrid, ScalarField, VectorField,
};
use crate::scenario::{
    scenario_manufactured, scenario_poiseuille, scenario_random_smooth, AmplitudeKind,
    AmplitudeProfile, ForcingMode, PressureDrop,
};
use crate::solver::{initial_flux, run, step_implicit, SolverConfig, State, Trajectory};

/// Relative rounding slack of the pointwise inequalities.
pub const REL_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(suite: &'static str, name: &str, passed: bool, detail: String) -> Self {
        Self {
            suite,
            name: name.to_string(),
            passed,
            detail,
        }
    }

    fn from_result(suite: &'static str, name: &str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((passed, detail)) => Self::new(suite, name, passed, detail),
            Err(e) => Self::new(suite, name, false, format!("error: {e}")),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}::{} ({})", self.suite, self.name, self.detail)
    }
}

#[derive(Clone, Debug, Default)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let failed = self.failures().count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Random samples per constitutive inequality.
    pub samples: usize,
    pub full: bool,
}

impl VerifyOptions {
    pub fn quick(seed: u64) -> Self {
        Self {
            seed,
            samples: 10_000,
            full: false,
        }
    }

    pub fn full(seed: u64) -> Self {
        Self {
            seed,
            samples: 100_000,
            full: true,
        }
    }
}

pub fn run_all(opts: &VerifyOptions) -> VerifyReport {
    let mut checks = Vec::new();
    checks.extend(constitutive_suite(opts));
    checks.extend(grid_suite(opts));
    checks.extend(solver_suite(opts));
    checks.extend(diagnostics_suite(opts));
    checks.extend(continuation_suite(opts));
    checks.extend(config_suite(opts));
    VerifyReport { checks }
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Random direction in `d` dimensions times a magnitude log-uniform in `[10^lo, 10^hi]`.
fn random_vector(rng: &mut ChaCha8Rng, d: usize, lo: f64, hi: f64) -> Vector {
    let r = 10f64.powf(rng.gen_range(lo..hi));
    if d == 1 {
        Vector::new1(if rng.gen_bool(0.5) { r } else { -r })
    } else {
        let th = rng.gen_range(0.0..2.0 * PI);
        Vector::new2(r * th.cos(), r * th.sin())
    }
}

/// Far-apart pairs and near pairs at relative distance down to 1e-6.
fn random_pair(rng: &mut ChaCha8Rng, d: usize) -> (Vector, Vector) {
    loop {
        let q1 = random_vector(rng, d, -4.0, 4.0);
        let q2 = if rng.gen_bool(0.5) {
            random_vector(rng, d, -4.0, 4.0)
        } else {
            q1 + random_vector(rng, d, -6.0, 0.0).scale(q1.norm())
        };
        if q1 != q2 {
            return (q1, q2);
        }
    }
}

fn sci(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn worst(acc: &mut (usize, f64), violated: bool, margin: f64) {
    if violated {
        acc.0 += 1;
    }
    acc.1 = acc.1.min(margin);
}

fn count_check(suite: &'static str, name: &str, samples: usize, acc: (usize, f64)) -> Check {
    Check::new(
        suite,
        name,
        acc.0 == 0,
        format!(
            "{} of {samples} samples violate, worst normalized margin {:.3e}",
            acc.0, acc.1
        ),
    )
}

// ---------------------------------------------------------------------------
// constitutive

pub fn constitutive_suite(opts: &VerifyOptions) -> Vec<Check> {
    let mut out = constitutive_inequalities(opts.samples, opts.seed);
    out.push(jacobian_consistency(opts.samples / 100, opts.seed));
    out.extend(inversion_roundtrip(opts.samples / 10, opts.seed));
    out.push(truncation_invariants(&[1, 5, 20], &[0.5, 1.0, 2.0]));
    out
}

/// Monotonicity, inverse Lipschitz, range, norm sandwich and the bound on
/// the weighted product, each on `samples` random draws.
pub fn constitutive_inequalities(samples: usize, seed: u64) -> Vec<Check> {
    const S: &str = "constitutive";
    let mut rng = rng(seed, 1);
    let mut strict = (0, f64::INFINITY);
    let mut strong = (0, f64::INFINITY);
    let mut lipschitz = (0, f64::INFINITY);
    let mut lipschitz_err = None;
    let mut ball = (0, f64::INFINITY);
    let mut ball_far = (0, f64::INFINITY);
    let mut sandwich = [(0, f64::INFINITY); 3];
    let mut product = (0, f64::INFINITY);
    let mut radial = (0, f64::INFINITY);

    for _ in 0..samples {
        let d = rng.gen_range(1..=2);
        let a = rng.gen_range(0.2..5.0);
        let eps = 10f64.powf(rng.gen_range(-4.0..0.0));
        let (q1, q2) = random_pair(&mut rng, d);
        let dq = q1 - q2;

        let (f1, f2) = (map_f(&q1, a), map_f(&q2, a));
        let lhs = (f1 - f2).dot(&dq);
        let scale = (f1.norm() + f2.norm()) * dq.norm();
        worst(&mut strict, !(lhs > -REL_SLACK * scale), lhs / scale);

        let (g1, g2) = (map_f_eps(&q1, a, eps), map_f_eps(&q2, a, eps));
        let lhs = (g1 - g2).dot(&dq);
        let rhs = eps * dq.norm_sq();
        let scale = (g1.norm() + g2.norm()) * dq.norm();
        worst(
            &mut strong,
            lhs < rhs - REL_SLACK * scale,
            (lhs - rhs) / scale,
        );

        // inverse Lipschitz on image points
        let (y1, y2) = (
            random_vector(&mut rng, d, -4.0, 3.0),
            random_vector(&mut rng, d, -4.0, 3.0),
        );
        let y2 = if rng.gen_bool(0.5) {
            y2
        } else {
            y1 + y2.scale(1e-4)
        };
        match (invert_map(&y1, a, eps), invert_map(&y2, a, eps)) {
            (Ok(p1), Ok(p2)) => {
                let lhs = (p1 - p2).norm();
                let rhs = (y1 - y2).norm() / eps;
                // inversion accuracy is 1e-12 relative in |q|
                let slack = REL_SLACK * rhs + 1e-11 * (1.0 + p1.norm() + p2.norm());
                worst(
                    &mut lipschitz,
                    lhs > rhs + slack,
                    (rhs - lhs) / (rhs + slack),
                );
            }
            (Err(e), _) | (_, Err(e)) => {
                lipschitz.0 += 1;
                lipschitz_err.get_or_insert_with(|| e.to_string());
            }
        }

        let q = random_vector(&mut rng, d, -8.0, 2.0);
        let fq = map_f(&q, a).norm();
        worst(&mut ball, !(fq < 1.0), 1.0 - fq);
        // at extreme radii f rounds to 1; the Euclidean norm of the
        // components may add one more rounding
        let far = random_vector(&mut rng, d, 2.0, 300.0);
        let fr = radial_f(far.norm(), a).unwrap_or(f64::NAN);
        let ff = map_f(&far, a).norm();
        worst(
            &mut ball_far,
            !(fr <= 1.0 && ff <= 1.0 + 2.0 * f64::EPSILON),
            1.0 - fr,
        );

        let q = random_vector(&mut rng, 2, -4.0, 4.0);
        let v = random_vector(&mut rng, 2, -3.0, 3.0);
        let w = random_vector(&mut rng, 2, -3.0, 3.0);
        let s = q.norm();
        let m = jacobian_a(&q, a);
        let plain = v.norm_sq();
        let upper = plain * radial_weight(s, a);
        let weighted = m.inner(&v, &v);
        let lower = plain * radial_f_prime(s, a).unwrap_or(f64::NAN);
        worst(
            &mut sandwich[0],
            !(upper <= plain * (1.0 + REL_SLACK)),
            (plain - upper) / plain,
        );
        worst(
            &mut sandwich[1],
            !(weighted <= upper * (1.0 + REL_SLACK)),
            (upper - weighted) / upper,
        );
        worst(
            &mut sandwich[2],
            !(weighted >= lower * (1.0 - REL_SLACK) && weighted > 0.0),
            (weighted - lower) / weighted,
        );
        let vw = m.inner(&v, &w);
        let bound = 2.0 * v.norm() * w.norm();
        worst(&mut product, !(vw <= bound), (bound - vw) / bound);

        let q = random_vector(&mut rng, d, -6.0, 6.0);
        let expect = q.scale(radial_f(q.norm(), a).unwrap_or(f64::NAN) / q.norm());
        let err = (map_f(&q, a) - expect).norm();
        worst(&mut radial, err > 4.0 * f64::EPSILON, -err);
    }

    let mut lip = count_check(S, "inverse_lipschitz", samples, lipschitz);
    if let Some(e) = lipschitz_err {
        lip.detail.push_str(&format!("; inversion failed: {e}"));
    }
    vec![
        count_check(S, "strict_monotonicity", samples, strict),
        count_check(S, "strong_monotonicity", samples, strong),
        lip,
        count_check(S, "range_open_unit_ball", samples, ball),
        count_check(S, "range_closed_unit_ball_extreme", samples, ball_far),
        count_check(S, "sandwich_plain_ge_weight", samples, sandwich[0]),
        count_check(S, "sandwich_weight_ge_metric", samples, sandwich[1]),
        count_check(S, "sandwich_metric_ge_lower", samples, sandwich[2]),
        count_check(S, "metric_product_bound", samples, product),
        count_check(S, "radial_consistency", samples, radial),
    ]
}

/// `A(q)` against central differences of `f` with a scale-relative step.
pub fn jacobian_consistency(samples: usize, seed: u64) -> Check {
    let mut rng = rng(seed, 2);
    let mut acc = (0, f64::INFINITY);
    for _ in 0..samples {
        let a = [0.3, 1.0, 2.0, 5.0][rng.gen_range(0..4)];
        let q = random_vector(&mut rng, 2, -8.0, 8.0);
        let h = 1e-6 * q.norm();
        let exact = jacobian_a(&q, a).entries();
        let (mut err, mut size) = (0.0_f64, 0.0_f64);
        for j in 0..2 {
            let e = Vector::unit(2, j).scale(h);
            let col = (map_f(&(q + e), a) - map_f(&(q - e), a)).scale(0.5 / h);
            for i in 0..2 {
                err += (col[i] - exact[i][j]).powi(2);
                size += exact[i][j].powi(2);
            }
        }
        let rel = err.sqrt() / size.sqrt();
        worst(&mut acc, !(rel <= 1e-6), 1e-6 - rel);
    }
    count_check("constitutive", "jacobian_finite_differences", samples, acc)
}

/// `f^ε(Q(y)) = y` for ε ∈ {0, 1e-1, 1e-3}, and refusal of `|y| ≥ 1` at ε = 0.
pub fn inversion_roundtrip(samples: usize, seed: u64) -> Vec<Check> {
    const S: &str = "constitutive";
    let mut rng = rng(seed, 3);
    let mut out = Vec::new();
    for eps in [0.0, 1e-1, 1e-3] {
        let mut acc = (0, f64::INFINITY);
        let mut first_err = None;
        for _ in 0..samples {
            let d = rng.gen_range(1..=2);
            let a = rng.gen_range(0.3..5.0);
            let y = if eps == 0.0 {
                let r = if rng.gen_bool(0.5) {
                    rng.gen_range(0.0..0.999)
                } else {
                    10f64.powf(rng.gen_range(-8.0..0.0)).min(0.999)
                };
                random_vector(&mut rng, d, 0.0, 1e-12).scale(r)
            } else {
                random_vector(&mut rng, d, -8.0, 4.0)
            };
            match invert_map(&y, a, eps) {
                Ok(q) => {
                    let err = (map_f_eps(&q, a, eps) - y).norm();
                    let tol = 1e-10 * (1.0 + y.norm());
                    worst(&mut acc, !(err <= tol), (tol - err) / tol);
                }
                Err(e) => {
                    acc.0 += 1;
                    first_err.get_or_insert_with(|| e.to_string());
                }
            }
        }
        let mut c = count_check(S, &format!("inversion_roundtrip_eps_{eps:e}"), samples, acc);
        if let Some(e) = first_err {
            c.detail.push_str(&format!("; {e}"));
        }
        out.push(c);
    }
    let mut refused = 0;
    for k in 0..samples {
        let d = rng.gen_range(1..=2);
        let a = rng.gen_range(0.3..5.0);
        let r = if k == 0 {
            1.0
        } else {
            1.0 + 10f64.powf(rng.gen_range(-12.0..6.0))
        };
        let y = random_vector(&mut rng, d, 0.0, 1e-12).scale(r);
        if !matches!(invert_map(&y, a, 0.0), Err(Error::DomainExceeded { .. })) {
            refused += 1;
        }
    }
    out.push(Check::new(
        S,
        "inversion_refuses_outside_unit_ball",
        refused == 0,
        format!("{refused} of {samples} values with |y| >= 1 accepted"),
    ));
    out
}

/// Shape, support and slope of `τ_k`, and the vanishing and bound of `G_k`.
pub fn truncation_invariants(ks: &[u32], exponents: &[f64]) -> Check {
    let mut problems = Vec::new();
    let mut worst_ratio: f64 = 0.0;
    for &k in ks {
        for &a in exponents {
            let tr = match TruncationPair::new(k, a) {
                Ok(tr) => tr,
                Err(e) => {
                    problems.push(format!("k={k} a={a}: {e}"));
                    continue;
                }
            };
            let kf = f64::from(k);
            let mut prev_tau = 1.0;
            let mut prev_g = 0.0;
            for i in 0..=4000 {
                let s = (kf + 3.0) * f64::from(i) / 4000.0;
                let tau = tr.tau(s);
                let slope = tr.tau_prime(s);
                let g = tr.g(s);
                let ok = (0.0..=1.0).contains(&tau)
                    && tau <= prev_tau
                    && (-2.0..=0.0).contains(&slope)
                    && (s > kf || (tau == 1.0 && g == 0.0))
                    && (s < kf + 1.0 || tau == 0.0)
                    && g <= prev_g + 1e-12
                    && g.abs() <= tr.g_bound();
                if !ok {
                    problems.push(format!("k={k} a={a} s={s}: tau={tau} tau'={slope} G={g}"));
                    break;
                }
                prev_tau = tau;
                prev_g = g;
            }
            for t in [kf + 1.0, 10.0 * (kf + 1.0)] {
                let r = tr.g(t).abs() / tr.g_bound();
                worst_ratio = worst_ratio.max(r);
                if r > 1.0 {
                    problems.push(format!("k={k} a={a}: |G({t})| above bound"));
                }
            }
        }
    }
    Check::new(
        "constitutive",
        "truncation_invariants",
        problems.is_empty(),
        if problems.is_empty() {
            format!("max |G_k| / bound = {worst_ratio:.4}")
        } else {
            problems.join("; ")
        },
    )
}

// ---------------------------------------------------------------------------
// grid

pub fn grid_suite(opts: &VerifyOptions) -> Vec<Check> {
    let ns: &[usize] = if opts.full { &[32, 64, 128] } else { &[32, 64] };
    vec![
        discrete_duality(ns, opts.seed),
        shift_equivariance(opts.seed),
        laplacian_order(),
        projection_orthogonality(opts.seed),
    ]
}

fn random_scalar(grid: PeriodicGrid, rng: &mut ChaCha8Rng) -> ScalarField {
    ScalarField::from_fn(grid, |_| rng.gen_range(-1.0..1.0))
}

fn random_vector_field(grid: PeriodicGrid, rng: &mut ChaCha8Rng) -> VectorField {
    let d = grid.dim();
    VectorField::from_fn(grid, |_| {
        let c: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Vector::from_slice(&c)
    })
}

/// `⟨∇_h u, v⟩ = −⟨u, div_h v⟩` on random fields, relative to `‖∇_h u‖ ‖v‖`.
pub fn discrete_duality(ns: &[usize], seed: u64) -> Check {
    let mut rng = rng(seed, 4);
    let mut worst_rel: f64 = 0.0;
    let mut cases = 0;
    for d in 1..=2 {
        for &n in ns {
            let grid = match PeriodicGrid::uniform(d, n, 1.0) {
                Ok(g) => g,
                Err(e) => return Check::new("grid", "discrete_duality", false, e.to_string()),
            };
            for _ in 0..5 {
                let u = random_scalar(grid, &mut rng);
                let v = random_vector_field(grid, &mut rng);
                let gu = gradient(&u);
                let lhs = gu.inner(&v);
                let rhs = -u.inner(&divergence(&v));
                let rel = (lhs - rhs).abs() / (gu.l2_norm() * v.l2_norm());
                worst_rel = worst_rel.max(rel);
                cases += 1;
            }
        }
    }
    Check::new(
        "grid",
        "discrete_duality",
        worst_rel <= 1e-13,
        format!("worst relative defect {worst_rel:.3e} over {cases} field pairs, n in {ns:?}, d in 1..=2"),
    )
}

/// Shifting by one cell commutes with the difference operators bit for bit.
pub fn shift_equivariance(seed: u64) -> Check {
    let mut rng = rng(seed, 5);
    let mut ok = true;
    for (d, n) in [(1, 17), (2, 12)] {
        let grid = PeriodicGrid::uniform(d, n, 1.3).expect("valid grid");
        let u = random_scalar(grid, &mut rng);
        let v = random_vector_field(grid, &mut rng);
        for axis in 0..d {
            ok &= gradient(&u.shifted(axis)) == gradient(&u).shifted(axis);
            ok &= divergence(&v.shifted(axis)) == divergence(&v).shifted(axis);
        }
    }
    Check::new(
        "grid",
        "shift_equivariance",
        ok,
        "exact equality, d = 1 and 2".into(),
    )
}

/// Observed order of `div_h ∇_h` against the Laplacian of smooth fields.
pub fn laplacian_order() -> Check {
    let mut orders = Vec::new();
    for d in 1..=2 {
        let errs: Vec<f64> = [32, 64, 128]
            .iter()
            .map(|&n| {
                let grid = PeriodicGrid::uniform(d, n, 1.0).expect("valid grid");
                let field = |x: &Vector| {
                    let y = if d == 2 { (4.0 * PI * x[1]).cos() } else { 1.0 };
                    (2.0 * PI * x[0]).sin() * y
                };
                let k2 = if d == 2 {
                    20.0 * PI * PI
                } else {
                    4.0 * PI * PI
                };
                let u = ScalarField::from_fn(grid, field);
                let exact = ScalarField::from_fn(grid, |x| -k2 * field(x));
                laplacian(&u).add_scaled(-1.0, &exact).max_abs()
            })
            .collect();
        orders.extend(errs.windows(2).map(|w| (w[0] / w[1]).log2()));
    }
    Check::new(
        "grid",
        "laplacian_second_order",
        orders.iter().all(|o| (1.7..=2.3).contains(o)),
        format!("observed orders {orders:.3?} for n = 32/64/128, d = 1 then 2"),
    )
}

/// `⟨P u, v − P v⟩ = 0` for the spectral projection.
pub fn projection_orthogonality(seed: u64) -> Check {
    let mut rng = rng(seed, 6);
    let mut worst_rel: f64 = 0.0;
    let mut err = None;
    for (d, n, modes) in [(1, 32, 7), (2, 16, 10), (2, 24, 33)] {
        let grid = PeriodicGrid::uniform(d, n, 1.0).expect("valid grid");
        let u = random_scalar(grid, &mut rng);
        let v = random_scalar(grid, &mut rng);
        match (spectral_project(&u, modes), spectral_project(&v, modes)) {
            (Ok(pu), Ok(pv)) => {
                let rel = pu.inner(&v.add_scaled(-1.0, &pv)).abs() / (u.l2_norm() * v.l2_norm());
                worst_rel = worst_rel.max(rel);
            }
            (Err(e), _) | (_, Err(e)) => err = Some(e.to_string()),
        }
    }
    Check::new(
        "grid",
        "projection_orthogonality",
        err.is_none() && worst_rel <= 1e-12,
        err.unwrap_or_else(|| format!("worst relative inner product {worst_rel:.3e}")),
    )
}

// ---------------------------------------------------------------------------
// solver

pub fn solver_suite(opts: &VerifyOptions) -> Vec<Check> {
    let mut out = manufactured_orders(if opts.full { 128 } else { 64 });
    out.push(contraction(opts.seed, if opts.full { 20 } else { 10 }));
    let runs = reference_runs(opts.seed, opts.full);
    match &runs {
        Ok(trajs) => {
            out.extend(energy_ledger(trajs));
            out.push(residual_identity(trajs));
            out.push(gradient_bound(trajs));
        }
        Err(e) => out.push(Check::new("solver", "reference_runs", false, e.to_string())),
    }
    out.push(uniform_exactness());
    out
}

fn manufactured_error(
    p: &ModelParams,
    prof: AmplitudeProfile,
    n: usize,
    dt: f64,
    t_end: f64,
) -> Result<f64> {
    let s = scenario_manufactured(p, prof)?;
    let grid = PeriodicGrid::uniform(p.d, n, p.length)?;
    let cfg = SolverConfig {
        dt,
        t_end,
        record_every: usize::MAX,
        ..Default::default()
    };
    let traj = run(&s, p, &grid, &cfg)?;
    let exact = s
        .exact(t_end, &grid)
        .ok_or_else(|| Error::Precondition("no exact solution".into()))??;
    Ok(traj.final_state().u.add_scaled(-1.0, &exact).l2_norm())
}

fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// 1D manufactured convergence with `a = 1`, `ε = 1e-2`: second order in
/// space over n = 32/64/128, first order in time over three halvings of Δt.
pub fn manufactured_orders(n_temporal: usize) -> Vec<Check> {
    let p = ModelParams {
        a: 1.0,
        epsilon: 1e-2,
        d: 1,
        length: 1.0,
        u_bound: 0.5,
    };
    let started = Instant::now();
    let spatial = AmplitudeProfile {
        a0: 0.1,
        rate: 1.0,
        horizon: 0.2,
        ..Default::default()
    };
    let space: Result<Vec<f64>> = [32, 64, 128]
        .iter()
        .map(|&n| manufactured_error(&p, spatial, n, 0.02, 0.2))
        .collect();
    let temporal = AmplitudeProfile {
        kind: AmplitudeKind::Exponential,
        a0: 0.1,
        rate: -2.0,
        horizon: 0.5,
        forcing: ForcingMode::SemiDiscrete,
    };
    let time: Result<Vec<f64>> = [0.05, 0.025, 0.0125]
        .iter()
        .map(|&dt| manufactured_error(&p, temporal, n_temporal, dt, 0.5))
        .collect();
    let elapsed = started.elapsed().as_secs_f64();
    let verdict = |errs: Result<Vec<f64>>, lo: f64, hi: f64| {
        errs.map(|e| {
            let o = observed_orders(&e);
            (
                o.iter().all(|x| (lo..=hi).contains(x)),
                format!("errors {}, orders {o:.3?}", sci(&e)),
            )
        })
    };
    vec![
        Check::from_result(
            "solver",
            "manufactured_spatial_order",
            verdict(space, 1.7, 2.3),
        ),
        Check::from_result(
            "solver",
            "manufactured_temporal_order",
            verdict(time, 0.8, 1.2).map(|(ok, d)| (ok, format!("{d}, n = {n_temporal}"))),
        ),
        Check::new(
            "solver",
            "manufactured_runtime",
            elapsed < 60.0,
            format!("{elapsed:.2} s for both studies"),
        ),
    ]
}

/// Two implicit trajectories with the same forcing and initial data that
/// differ by a smooth bump never move apart in `L²`.
pub fn contraction(seed: u64, steps: usize) -> Check {
    let r = (|| -> Result<(bool, String)> {
        let p = ModelParams {
            a: 0.7,
            epsilon: 0.05,
            d: 2,
            length: 1.0,
            u_bound: 0.9,
        };
        let grid = PeriodicGrid::uniform(2, 16, 1.0)?;
        let s = scenario_random_smooth(&p, seed, 0.9, 0.5)?;
        let u1 = s.initial(&grid)?;
        let bump = ScalarField::from_fn(grid, |x| {
            0.05 * (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos()
        });
        let u2 = u1.add_scaled(1.0, &bump);
        let mut a = State {
            t: 0.0,
            q: initial_flux(&u1, &p)?,
            u: u1,
        };
        let mut b = State {
            t: 0.0,
            q: initial_flux(&u2, &p)?,
            u: u2,
        };
        let cfg = SolverConfig {
            dt: 0.01,
            t_end: 0.01 * steps as f64,
            ..Default::default()
        };
        let mut gap = a.u.add_scaled(-1.0, &b.u).l2_norm();
        let first = gap;
        let mut violations = 0;
        for _ in 0..steps {
            let g = s.forcing(a.t + cfg.dt, &grid)?;
            a = step_implicit(&a, &g, &p, &cfg)?;
            b = step_implicit(&b, &g, &p, &cfg)?;
            let next = a.u.add_scaled(-1.0, &b.u).l2_norm();
            if next > gap * (1.0 + 1e-10) {
                violations += 1;
            }
            gap = next;
        }
        Ok((
            violations == 0,
            format!("{violations} increasing steps of {steps}; gap {first:.4e} -> {gap:.4e}"),
        ))
    })();
    Check::from_result("solver", "l2_contraction", r)
}

/// A set of implicit runs covering 1D/2D, several exponents, forced and
/// unforced data. The checks below are evaluated on every stored state.
pub fn reference_runs(seed: u64, full: bool) -> Result<Vec<Trajectory>> {
    let n2 = if full { 32 } else { 16 };
    let cases = [
        (1, 64, 1.0, 0.02, 0.9, 0.0),
        (1, 64, 0.5, 1e-3, 0.99, 0.0),
        (2, n2, 0.5, 1e-2, 0.99, 0.0),
        (2, n2, 2.0, 0.05, 0.9, 0.0),
        (2, n2, 1.0, 0.02, 0.5, 1.0),
    ];
    cases
        .iter()
        .enumerate()
        .map(|(k, &(d, n, a, eps, u_bound, amp))| {
            let p = ModelParams {
                a,
                epsilon: eps,
                d,
                length: 1.0,
                u_bound,
            };
            let grid = PeriodicGrid::uniform(d, n, 1.0)?;
            let s = scenario_random_smooth(&p, seed.wrapping_add(k as u64), u_bound, amp)?;
            let cfg = SolverConfig {
                dt: 0.005,
                t_end: 0.05,
                ..Default::default()
            };
            run(&s, &p, &grid, &cfg)
        })
        .collect()
}

/// Discrete energy inequality at every step and monotone `‖u‖₂` for `g = 0`.
pub fn energy_ledger(trajs: &[Trajectory]) -> Vec<Check> {
    let mut failing = Vec::new();
    let mut monotone_failures = Vec::new();
    let mut unforced = 0;
    for (k, t) in trajs.iter().enumerate() {
        let rep = energy_ledger_check(t, &t.params);
        if !rep.passed() {
            failing.push(format!("run {k}: {} failing steps", rep.failures().count()));
        }
        if t.energy.iter().all(|e| e.forcing_l2_sq == 0.0) {
            unforced += 1;
            let l2: Vec<f64> = t.diagnostics.iter().map(|r| r.l2_u).collect();
            if !rep.l2_monotone || l2.windows(2).any(|w| w[1] > w[0] * (1.0 + 1e-10)) {
                monotone_failures.push(k);
            }
        }
    }
    vec![
        Check::new(
            "solver",
            "energy_inequality",
            failing.is_empty(),
            if failing.is_empty() {
                format!("{} runs, every step within slack 1e-10", trajs.len())
            } else {
                failing.join("; ")
            },
        ),
        Check::new(
            "solver",
            "unforced_l2_monotone",
            monotone_failures.is_empty() && unforced > 0,
            format!("{unforced} unforced runs, non-monotone: {monotone_failures:?}"),
        ),
    ]
}

/// `‖∇u − f(q) − εq‖_∞ ≤ newton_tol (1 + max|q|)` at every stored state.
pub fn residual_identity(trajs: &[Trajectory]) -> Check {
    let mut worst_ratio: f64 = 0.0;
    let mut states = 0;
    for t in trajs {
        for s in &t.snapshots {
            let bound = t.config.newton_tol * (1.0 + s.state.q.max_norm());
            worst_ratio = worst_ratio.max(s.state.constitutive_defect(&t.params) / bound);
            states += 1;
        }
    }
    Check::new(
        "solver",
        "constitutive_residual_identity",
        worst_ratio <= 1.0,
        format!("{states} states, worst defect / bound = {worst_ratio:.3e}"),
    )
}

/// `‖∇_h u‖_∞ ≤ 1 + ε‖q‖_∞ + newton_tol`.
pub fn gradient_bound(trajs: &[Trajectory]) -> Check {
    let mut worst_gap = f64::INFINITY;
    for t in trajs {
        for (s, r) in t.snapshots.iter().zip(&t.diagnostics) {
            let bound = 1.0 + t.params.epsilon * s.state.q.max_norm() + t.config.newton_tol;
            worst_gap = worst_gap.min(bound - r.sup_grad_u);
        }
    }
    Check::new(
        "solver",
        "gradient_bound",
        worst_gap >= 0.0,
        format!("smallest margin {worst_gap:.3e}"),
    )
}

/// Spatially uniform data follow `u' = g` exactly.
pub fn uniform_exactness() -> Check {
    let r = (|| -> Result<(bool, String)> {
        let p = ModelParams {
            a: 1.0,
            epsilon: 0.01,
            d: 1,
            length: 1.0,
            u_bound: 0.0,
        };
        let drop = PressureDrop::Sine {
            gamma: 1.5,
            omega: 4.0,
        };
        let s = scenario_poiseuille(&p, drop)?;
        let grid = PeriodicGrid::uniform(1, 32, 1.0)?;
        let cfg = SolverConfig {
            dt: 0.01,
            t_end: 0.5,
            ..Default::default()
        };
        let traj = run(&s, &p, &grid, &cfg)?;
        // backward Euler sum of g at the right endpoints
        let mut expect = 0.0;
        let mut t = 0.0;
        let mut err: f64 = 0.0;
        let mut flux: f64 = 0.0;
        for snap in traj.snapshots.iter().skip(1) {
            while t < snap.state.t - 1e-12 {
                t += cfg.dt;
                expect += cfg.dt * drop.eval(t);
            }
            err = err.max(
                snap.state
                    .u
                    .add_scaled(-1.0, &ScalarField::constant(grid, expect))
                    .max_abs(),
            );
            flux = flux.max(snap.state.q.max_norm());
        }
        Ok((
            err <= 1e-13 && flux == 0.0,
            format!("max deviation from the ODE {err:.3e}, max |q| {flux:e}"),
        ))
    })();
    Check::from_result("solver", "uniform_data_exact", r)
}

// ---------------------------------------------------------------------------
// diagnostics

pub fn diagnostics_suite(opts: &VerifyOptions) -> Vec<Check> {
    let mut out = vec![initial_flux_bounds(
        if opts.full { 64 } else { 32 },
        opts.seed,
    )];
    out.push(flux_exponent_flip());
    out.extend(renormalization(&[1, 5, 20], &[0.5, 1.0, 2.0]));
    match reference_runs(opts.seed, false) {
        Ok(trajs) => out.push(weighted_sandwich(&trajs)),
        Err(e) => out.push(Check::new(
            "diagnostics",
            "weighted_sandwich",
            false,
            e.to_string(),
        )),
    }
    out
}

/// `max|q(0)| ≤ U/(1−Uᵃ)^{1/a}` for the ε = 0 flux of random smooth data.
pub fn initial_flux_bounds(n: usize, seed: u64) -> Check {
    let r = (|| -> Result<(bool, String)> {
        let mut ok = true;
        let mut worst_ratio: f64 = 0.0;
        let mut cases = 0;
        for u in [0.5, 0.9, 0.99] {
            for a in [0.5, 1.0, 2.0] {
                for d in 1..=2 {
                    let p = ModelParams {
                        a,
                        epsilon: 0.0,
                        d,
                        length: 1.0,
                        u_bound: u,
                    };
                    let grid = PeriodicGrid::uniform(d, n, 1.0)?;
                    let s = scenario_random_smooth(&p, seed, u, 0.0)?;
                    let u0 = s.initial(&grid)?;
                    let q0 = initial_flux(&u0, &p)?;
                    let c = initial_bound_check(&q0, &p);
                    ok &= c.passed;
                    worst_ratio = worst_ratio.max(c.max_flux / initial_flux_bound(u, a));
                    cases += 1;
                }
            }
        }
        let example = initial_flux_bound(0.9, 2.0);
        ok &= (example - 2.06474).abs() < 1e-5;
        Ok((
            ok,
            format!("{cases} cases, worst max|q0| / bound = {worst_ratio:.12}; bound(0.9, 2) = {example:.6}"),
        ))
    })();
    Check::from_result("diagnostics", "initial_flux_bound", r)
}

/// `b` is admissible exactly for `a < 2/(d+1)`.
pub fn flux_exponent_flip() -> Check {
    let mut ok = true;
    let mut detail = Vec::new();
    for d in 1..=2 {
        let threshold = 2.0 / (d as f64 + 1.0);
        let at = |a: f64| {
            flux_exponent(
                &ModelParams {
                    a,
                    d,
                    ..Default::default()
                },
                None,
            )
            .valid
        };
        let below = at(threshold.next_down());
        let exact = at(threshold);
        let above = at(threshold.next_up());
        ok &= below && !exact && !above;
        detail.push(format!("d={d}: below {below}, at {exact}, above {above}"));
    }
    let b = flux_exponent(
        &ModelParams {
            a: 0.5,
            d: 2,
            ..Default::default()
        },
        None,
    )
    .b;
    ok &= (b - 1.5).abs() < 1e-15;
    detail.push(format!("b(d=2, a=0.5) = {b}"));
    Check::new(
        "diagnostics",
        "flux_exponent_threshold",
        ok,
        detail.join("; "),
    )
}

/// Truncation invariants, then the renormalized residual on manufactured
/// runs: with inactive truncation it stays within 10× the plain weak-form
/// defect, and with active truncation it still balances to solver accuracy.
pub fn renormalization(ks: &[u32], exponents: &[f64]) -> Vec<Check> {
    let mut out = vec![truncation_invariants(ks, exponents)];
    let r = (|| -> Result<(bool, String)> {
        let mut ok = true;
        let mut lines = Vec::new();
        for &a in exponents {
            let p = ModelParams {
                a,
                epsilon: 0.01,
                d: 1,
                length: 1.0,
                u_bound: 0.5,
            };
            let prof = AmplitudeProfile {
                a0: 0.1,
                rate: 1.0,
                horizon: 0.2,
                ..Default::default()
            };
            let s = scenario_manufactured(&p, prof)?;
            let grid = PeriodicGrid::uniform(1, 64, 1.0)?;
            let cfg = SolverConfig {
                dt: 0.01,
                t_end: 0.2,
                ..Default::default()
            };
            let traj = run(&s, &p, &grid, &cfg)?;
            let psi = TestFunction::from_field(ScalarField::from_fn(grid, |x| {
                (2.0 * PI * x[0]).cos() + 0.5
            }));
            let qmax = traj
                .snapshots
                .iter()
                .map(|s| s.state.q.max_norm())
                .fold(0.0, f64::max);
            let scale: f64 = traj
                .snapshots
                .iter()
                .map(|s| s.state.u.l2_norm() + 1.0)
                .sum();
            let tol = 10.0 * cfg.newton_tol * scale;
            let plain = plain_weak_defect(&traj, &psi, &p)?;
            let mut levels: Vec<u32> = ks.to_vec();
            levels.push(qmax.ceil() as u32 + 1);
            for &k in &levels {
                let rep = renormalization_residual(&traj, k, &psi, &p)?;
                if f64::from(k) > qmax {
                    let pass = rep.residual.abs() <= 10.0 * plain.abs();
                    ok &= pass;
                    lines.push(format!(
                        "a={a} k={k} inactive: |R| = {:.2e} vs plain {:.2e}",
                        rep.residual.abs(),
                        plain.abs()
                    ));
                } else {
                    let pass = rep.residual.abs() <= tol;
                    ok &= pass;
                    lines.push(format!(
                        "a={a} k={k} active: |R| = {:.2e} (tol {tol:.1e})",
                        rep.residual.abs()
                    ));
                }
            }
        }
        Ok((ok, lines.join("; ")))
    })();
    out.push(Check::from_result(
        "diagnostics",
        "renormalization_residual",
        r,
    ));
    out
}

/// `weighted_grad_q` between `∫|∇q|²/(1+max|q|ᵃ)^{1+1/a}` and `∫|∇q|²`.
pub fn weighted_sandwich(trajs: &[Trajectory]) -> Check {
    let mut violations = 0;
    let mut records = 0;
    for t in trajs {
        let (a, eps) = (t.params.a, t.params.epsilon);
        for (s, r) in t.snapshots.iter().zip(&t.diagnostics) {
            let plain = r.grad_q_sq(eps);
            let qmax = s.state.q.max_norm();
            let lower = plain / (1.0 + qmax.powf(a)).powf(1.0 + 1.0 / a);
            if r.weighted_grad_q > plain * (1.0 + REL_SLACK)
                || r.weighted_grad_q < lower * (1.0 - REL_SLACK)
            {
                violations += 1;
            }
            records += 1;
        }
    }
    Check::new(
        "diagnostics",
        "weighted_sandwich",
        violations == 0,
        format!("{violations} of {records} records outside the sandwich"),
    )
}

// ---------------------------------------------------------------------------
// continuation

pub fn continuation_suite(opts: &VerifyOptions) -> Vec<Check> {
    let n = if opts.full { 256 } else { 64 };
    let mut out = sweep_behavior(n, opts.seed);
    out.extend(probe(if opts.full { 64 } else { 32 }, opts.seed));
    out.push(sweep_order_independence(opts.seed));
    out
}

/// Successive Cauchy differences counted as increasing when they grow by
/// more than `floor`.
pub fn non_monotone_pairs(report: &SweepReport, floor: f64) -> Result<usize> {
    let c: Vec<f64> = report
        .cauchy
        .iter()
        .map(|c| c.ok_or_else(|| Error::Precondition("sweep has failed entries".into())))
        .collect::<Result<_>>()?;
    Ok(c.windows(2).filter(|w| w[1] > w[0] + floor).count())
}

fn residual_vs_epsilon(report: &SweepReport) -> (bool, String) {
    let tol = report.config.newton_tol;
    let mut worst: f64 = 0.0;
    let mut ok = report.failures().count() == 0;
    for s in report.summaries() {
        let bound = tol * (1.0 + s.max_q);
        let r = (s.residual - s.predicted_residual)
            .abs()
            .max(s.identity_defect)
            / bound;
        worst = worst.max(r);
        ok &= r <= 1.0;
    }
    (
        ok,
        format!("worst |residual − ε max|q|| / tolerance = {worst:.3e}"),
    )
}

fn sweep_trend(report: &SweepReport) -> Result<(bool, String)> {
    // differences at the solver's accuracy carry no trend
    let scale = report
        .summaries()
        .map(|s| s.final_record.l2_u)
        .fold(0.0, f64::max);
    let floor = report.config.newton_tol * (1.0 + scale);
    let bad = non_monotone_pairs(report, floor)?;
    let c: Vec<f64> = report.cauchy.iter().flatten().copied().collect();
    Ok((
        bad <= 1,
        format!(
            "{bad} non-monotone pairs (floor {floor:.1e}); differences {}",
            sci(&c)
        ),
    ))
}

/// Default ε sweep in 1D on `n` points: the residual against `f` alone is
/// `ε max|q|`, and Cauchy differences decrease with at most one exception,
/// on the Poiseuille scenario and on random smooth data.
pub fn sweep_behavior(n: usize, seed: u64) -> Vec<Check> {
    const S: &str = "continuation";
    let mut out = Vec::new();
    let base = ModelParams {
        a: 1.0,
        epsilon: 0.1,
        d: 1,
        length: 1.0,
        u_bound: 0.9,
    };
    let cfg = SolverConfig {
        dt: 0.005,
        t_end: 0.1,
        ..Default::default()
    };
    let plans = [
        (
            "poiseuille",
            scenario_poiseuille(&base, PressureDrop::Constant { gamma: 1.0 }),
        ),
        (
            "random_smooth",
            scenario_random_smooth(&base, seed, 0.9, 0.5),
        ),
    ];
    for (name, scenario) in plans {
        let report = scenario.and_then(|s| {
            let grid = PeriodicGrid::uniform(1, n, 1.0)?;
            eps_sweep(&SweepPlan::new(s, base, grid, cfg))
        });
        match report {
            Ok(rep) => {
                let (ok, detail) = residual_vs_epsilon(&rep);
                out.push(Check::new(
                    S,
                    &format!("{name}_residual_is_eps_max_q"),
                    ok,
                    detail,
                ));
                out.push(Check::from_result(
                    S,
                    &format!("{name}_cauchy_trend"),
                    sweep_trend(&rep),
                ));
            }
            Err(e) => out.push(Check::new(
                S,
                &format!("{name}_sweep"),
                false,
                e.to_string(),
            )),
        }
    }
    out
}

/// `L^b` norms of the flux across ε ∈ {1e-2, 1e-3, 1e-4} in 2D with
/// `a = 0.5`, `U = 0.99`, and refusal of the probe at `a = 1`.
pub fn probe(n: usize, seed: u64) -> Vec<Check> {
    const S: &str = "continuation";
    let p = ModelParams {
        a: 0.5,
        epsilon: 1e-2,
        d: 2,
        length: 1.0,
        u_bound: 0.99,
    };
    let cfg = SolverConfig {
        dt: 1e-3,
        t_end: 0.05,
        ..Default::default()
    };
    let probe = (|| -> Result<(bool, String)> {
        let s = scenario_random_smooth(&p, seed, 0.99, 0.0)?;
        let mut plan = SweepPlan::new(s, p, PeriodicGrid::uniform(2, n, 1.0)?, cfg);
        plan.epsilons = vec![1e-2, 1e-3, 1e-4];
        let (_, probe) = integrability_probe(&plan)?;
        Ok((
            probe.bounded && probe.b == 1.5,
            format!(
                "b = {}, norms {:.4?}, spread {:.4}, n = {n}",
                probe.b, probe.norms, probe.spread
            ),
        ))
    })();
    let refused = (|| -> Result<(bool, String)> {
        let q = ModelParams { a: 1.0, ..p };
        let s = scenario_random_smooth(&q, seed, 0.99, 0.0)?;
        let plan = SweepPlan::new(s, q, PeriodicGrid::uniform(2, 8, 1.0)?, cfg);
        Ok(match integrability_probe(&plan) {
            Err(Error::Precondition(m)) => (true, m),
            Err(e) => (false, format!("wrong error: {e}")),
            Ok(_) => (false, "probe ran at a = 1, d = 2".into()),
        })
    })();
    vec![
        Check::from_result(S, "integrability_probe_bounded", probe),
        Check::from_result(S, "integrability_probe_refused_above_threshold", refused),
    ]
}

/// Concurrent and sequential sweeps give identical reports, twice over.
pub fn sweep_order_independence(seed: u64) -> Check {
    let r = (|| -> Result<(bool, String)> {
        let p = ModelParams {
            a: 1.0,
            epsilon: 0.1,
            d: 2,
            length: 1.0,
            u_bound: 0.9,
        };
        let s = scenario_random_smooth(&p, seed, 0.9, 0.3)?;
        let cfg = SolverConfig {
            dt: 0.01,
            t_end: 0.05,
            ..Default::default()
        };
        let mut plan = SweepPlan::new(s, p, PeriodicGrid::uniform(2, 12, 1.0)?, cfg);
        plan.epsilons = default_epsilons()[..5].to_vec();
        let a = eps_sweep(&plan)?;
        let b = eps_sweep(&plan)?;
        plan.concurrent = false;
        let c = eps_sweep(&plan)?;
        let json = |r: &SweepReport| -> Result<Vec<u8>> {
            let mut buf = Vec::new();
            r.write_json(&mut buf)?;
            Ok(buf)
        };
        let same = a == b && a == c && json(&a)? == json(&c)?;
        Ok((same, format!("{} entries compared", a.entries.len())))
    })();
    Check::from_result("continuation", "sweep_order_independence", r)
}

// ---------------------------------------------------------------------------
// configuration and determinism

pub fn config_suite(opts: &VerifyOptions) -> Vec<Check> {
    vec![config_round_trip(), ledger_determinism(opts.seed)]
}

pub fn config_round_trip() -> Check {
    let samples = [
        "",
        "[scenario]\ntype = \"poiseuille\"\nprofile = \"step\"\ngamma = 2.0\nt_on = 0.1\n",
        "[scenario]\ntype = \"manufactured\"\nkind = \"exponential\"\nrate = -2.0\nforcing = \"semi_discrete\"\n\
         [model]\na = 2.0\nepsilon = 0.01\n[solver]\nscheme = \"explicit\"\ndt = 1e-5\n",
        "[scenario]\ntype = \"random_smooth\"\nseed = 9\n[model]\nd = 2\nU = 0.99\na = 0.5\n\
         [sweep]\nepsilons = [0.01, 0.001]\nprobe = true\n[output]\ndir = \"x\"\nfields = false\n",
    ];
    let mut bad = Vec::new();
    for (k, text) in samples.iter().enumerate() {
        let ok = RunConfig::from_toml_str(text).and_then(|c| {
            let s = c.to_toml_string()?;
            let back = RunConfig::from_toml_str(&s)?;
            Ok(back == c && back.to_toml_string()? == s)
        });
        if !matches!(ok, Ok(true)) {
            bad.push(k);
        }
    }
    Check::new(
        "config",
        "round_trip",
        bad.is_empty(),
        format!("{} samples, failing {bad:?}", samples.len()),
    )
}

/// Ledger bytes of one configured run.
pub fn ledger_bytes(cfg: &RunConfig) -> Result<Vec<u8>> {
    let scenario = cfg.scenario()?;
    let traj = run(&scenario, &cfg.model, &cfg.grid()?, &cfg.solver.config())?;
    let mut buf = Vec::new();
    write_ledger(&traj.diagnostics, &mut buf)?;
    Ok(buf)
}

pub fn ledger_determinism(seed: u64) -> Check {
    let r = (|| -> Result<(bool, String)> {
        let text = format!(
            "[scenario]\ntype = \"random_smooth\"\nseed = {seed}\nforcing_amplitude = 0.5\n\
             [model]\nd = 2\na = 0.5\nepsilon = 0.01\nU = 0.95\n[solver]\nn = 16\ndt = 0.005\nt_end = 0.05\n"
        );
        let cfg = RunConfig::from_toml_str(&text)?;
        let a = ledger_bytes(&cfg)?;
        let b = ledger_bytes(&cfg)?;
        Ok((a == b, format!("{} ledger bytes compared", a.len())))
    })();
    Check::from_result("config", "ledger_determinism", r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suite_passes() {
        let report = run_all(&VerifyOptions {
            samples: 2_000,
            ..VerifyOptions::quick(0)
        });
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn failures_are_reported_not_panicked() {
        let c = Check::from_result("x", "y", Err(Error::Precondition("boom".into())));
        assert!(!c.passed);
        assert!(c.to_string().starts_with("FAIL x::y"));
        let rep = VerifyReport { checks: vec![c] };
        assert!(!rep.passed());
        assert!(rep.to_string().ends_with("1 checks, 1 failed"));
    }
}
