//! The `ε → 0` limit: sweeps over a decreasing ε sequence.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constitutive::{map_f, ModelParams};
use crate::diagnostics::{flux_exponent, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::grid::{gradient, PeriodicGrid, ScalarField};
use crate::scenario::Scenario;
use crate::solver::{run, SolverConfig, Trajectory};

/// Geometric ε sequence `0.1 · 2^{−m}` down to `10⁻⁴`.
pub fn default_epsilons() -> Vec<f64> {
    (0..)
        .map(|m| 0.1 * 0.5f64.powi(m))
        .take_while(|&e| e >= 1e-4)
        .collect()
}

#[derive(Clone, Debug)]
pub struct SweepPlan {
    pub scenario: Scenario,
    /// Parameters shared by every run; `epsilon` is overwritten per entry.
    pub params: ModelParams,
    pub epsilons: Vec<f64>,
    pub config: SolverConfig,
    pub grid: PeriodicGrid,
    /// Exponent for the `L^b` flux norms when `d = 1`.
    pub user_b: Option<f64>,
    /// Run the ε entries on the rayon pool.
    pub concurrent: bool,
}

impl SweepPlan {
    pub fn new(
        scenario: Scenario,
        params: ModelParams,
        grid: PeriodicGrid,
        config: SolverConfig,
    ) -> Self {
        Self {
            scenario,
            params,
            epsilons: default_epsilons(),
            config,
            grid,
            user_b: None,
            concurrent: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilons.is_empty() {
            return Err(Error::InvalidParameter(
                "sweep needs at least one epsilon".into(),
            ));
        }
        if self.epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "sweep epsilons must be positive and finite: {:?}",
                self.epsilons
            )));
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidParameter(format!(
                "sweep epsilons must be strictly decreasing: {:?}",
                self.epsilons
            )));
        }
        self.config.validate()?;
        self.params.with_epsilon(self.epsilons[0]).validate()?;
        if self.grid.dim() != self.params.d || self.scenario.dim() != self.params.d {
            return Err(Error::GridMismatch(format!(
                "sweep mixes dimensions: grid {}, scenario {}, model {}",
                self.grid.dim(),
                self.scenario.dim(),
                self.params.d
            )));
        }
        Ok(())
    }

    /// Exponent of the `L^b` norms, when one is admissible.
    pub fn lb_exponent(&self) -> Option<f64> {
        flux_exponent(&self.params, self.user_b).usable()
    }
}

/// Per-ε scalar summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsSummary {
    pub epsilon: f64,
    pub final_record: DiagnosticsRecord,
    /// `max_t ‖q‖_∞` over stored states.
    pub max_q: f64,
    /// `max_t ‖∇u − f(q)‖_∞`.
    pub residual: f64,
    /// `ε · max_t ‖q‖_∞`, what `residual` must equal.
    pub predicted_residual: f64,
    /// `max_t ‖∇u − f(q) − εq‖_∞`.
    pub identity_defect: f64,
    /// `(∫∫ |q|^b)^{1/b}` for the flux held constant on each recorded interval.
    pub lb_norm: Option<f64>,
    pub steps: usize,
    pub newton_iterations: usize,
    pub linear_iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub epsilon: f64,
    pub summary: Option<EpsSummary>,
    pub error: Option<String>,
    /// Set by writers that dump the final field.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub field_path: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridEcho {
    pub n: Vec<usize>,
    #[serde(rename = "L")]
    pub length: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepReport {
    pub scenario_id: String,
    pub params: ModelParams,
    pub config: SolverConfig,
    pub grid: GridEcho,
    pub epsilons: Vec<f64>,
    pub lb_exponent: Option<f64>,
    pub entries: Vec<SweepEntry>,
    /// `‖u^{ε_m} − u^{ε_{m+1}}‖_{L²(Q)}`, absent when either run failed.
    pub cauchy: Vec<Option<f64>>,
    #[serde(skip)]
    pub final_fields: Vec<Option<ScalarField>>,
}

impl PartialEq for SweepReport {
    fn eq(&self, other: &Self) -> bool {
        self.scenario_id == other.scenario_id
            && self.params == other.params
            && self.config == other.config
            && self.grid == other.grid
            && self.epsilons == other.epsilons
            && self.lb_exponent == other.lb_exponent
            && self.entries == other.entries
            && self.cauchy == other.cauchy
            && self.final_fields == other.final_fields
    }
}

impl SweepReport {
    pub fn summaries(&self) -> impl Iterator<Item = &EpsSummary> {
        self.entries.iter().filter_map(|e| e.summary.as_ref())
    }

    pub fn failures(&self) -> impl Iterator<Item = &SweepEntry> {
        self.entries.iter().filter(|e| e.error.is_some())
    }

    /// Successive ratios of the constitutive residual.
    pub fn residual_ratios(&self) -> Vec<Option<f64>> {
        self.entries
            .windows(2)
            .map(|w| match (&w[0].summary, &w[1].summary) {
                (Some(a), Some(b)) if a.residual > 0.0 => Some(b.residual / a.residual),
                _ => None,
            })
            .collect()
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

fn summarize(traj: &Trajectory, epsilon: f64, lb_exponent: Option<f64>) -> EpsSummary {
    let a = traj.params.a;
    let mut max_q: f64 = 0.0;
    let mut residual: f64 = 0.0;
    let mut identity_defect: f64 = 0.0;
    for snap in &traj.snapshots {
        let st = &snap.state;
        let grad = gradient(&st.u);
        for i in 0..st.grid().len() {
            let q = st.q.at(i);
            let r = grad.at(i) - map_f(&q, a);
            residual = residual.max(r.norm());
            identity_defect = identity_defect.max((r - q.scale(epsilon)).norm());
            max_q = max_q.max(q.norm());
        }
    }
    // q is piecewise constant in time under backward Euler: the state at t_k
    // stands for (t_{k-1}, t_k], and the instant t = 0 carries no weight
    let lb_norm = lb_exponent.map(|b| {
        let vol = traj.grid().cell_volume();
        let integral: f64 = traj
            .snapshots
            .windows(2)
            .map(|w| {
                let q = &w[1].state.q;
                let sum: f64 = (0..q.grid().len()).map(|i| q.at(i).norm().powf(b)).sum();
                (w[1].state.t - w[0].state.t) * sum * vol
            })
            .sum();
        integral.powf(1.0 / b)
    });
    EpsSummary {
        epsilon,
        final_record: *traj.diagnostics.last().expect("initial record"),
        max_q,
        residual,
        predicted_residual: epsilon * max_q,
        identity_defect,
        lb_norm,
        steps: traj.stats.steps,
        newton_iterations: traj.stats.newton_iterations,
        linear_iterations: traj.stats.linear_iterations,
    }
}

/// Trapezoid rule over `(t, value)` samples.
fn trapezoid(samples: &[(f64, f64)]) -> f64 {
    samples
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum()
}

/// `(∫ ‖a(t) − b(t)‖² dt)^{1/2}` with the trapezoid rule on shared record times.
fn space_time_distance(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    if a.snapshots.len() != b.snapshots.len() {
        return Err(Error::GridMismatch(
            "trajectories record different times".into(),
        ));
    }
    let sq: Vec<(f64, f64)> = a
        .snapshots
        .iter()
        .zip(&b.snapshots)
        .map(|(x, y)| {
            (
                x.state.t,
                x.state.u.add_scaled(-1.0, &y.state.u).l2_norm_sq(),
            )
        })
        .collect();
    let total = trapezoid(&sq);
    Ok(total.sqrt())
}

/// Runs every ε of the plan; a failing run marks only its own entry.
pub fn eps_sweep(plan: &SweepPlan) -> Result<SweepReport> {
    plan.validate()?;
    let lb_exponent = plan.lb_exponent();
    let run_one = |&eps: &f64| -> Result<Trajectory> {
        let params = plan.params.with_epsilon(eps);
        run(&plan.scenario, &params, &plan.grid, &plan.config).map_err(|e| Error::AtEpsilon {
            epsilon: eps,
            source: Box::new(e),
        })
    };
    let runs: Vec<Result<Trajectory>> = if plan.concurrent {
        plan.epsilons.par_iter().map(run_one).collect()
    } else {
        plan.epsilons.iter().map(run_one).collect()
    };

    let entries = plan
        .epsilons
        .iter()
        .zip(&runs)
        .map(|(&eps, r)| match r {
            Ok(traj) => SweepEntry {
                epsilon: eps,
                summary: Some(summarize(traj, eps, lb_exponent)),
                error: None,
                field_path: None,
            },
            Err(e) => SweepEntry {
                epsilon: eps,
                summary: None,
                error: Some(e.to_string()),
                field_path: None,
            },
        })
        .collect();
    let cauchy = runs
        .windows(2)
        .map(|w| match (&w[0], &w[1]) {
            (Ok(a), Ok(b)) => space_time_distance(a, b).ok(),
            _ => None,
        })
        .collect();
    let final_fields = runs
        .iter()
        .map(|r| r.as_ref().ok().map(|t| t.final_state().u.clone()))
        .collect();

    Ok(SweepReport {
        scenario_id: plan.scenario.id().to_string(),
        params: plan.params,
        config: plan.config,
        grid: GridEcho {
            n: plan.grid.counts().to_vec(),
            length: plan.grid.length(),
        },
        epsilons: plan.epsilons.clone(),
        lb_exponent,
        entries,
        cauchy,
        final_fields,
    })
}

// ---------------------------------------------------------------------------
// integrability probe

/// Factor by which the last three `L^b` norms may vary and still count as bounded.
pub const PROBE_FACTOR: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub b: f64,
    pub epsilons: Vec<f64>,
    pub norms: Vec<Option<f64>>,
    /// max/min over the last three available norms.
    pub spread: f64,
    pub bounded: bool,
}

fn probe_gate(params: &ModelParams, user_b: Option<f64>) -> Result<f64> {
    let e = flux_exponent(params, user_b);
    if !e.valid {
        return Err(Error::Precondition(format!(
            "the higher-integrability probe needs a < 2/(d+1) = {:.6}, got a = {} in d = {}",
            2.0 / (params.d as f64 + 1.0),
            params.a,
            params.d
        )));
    }
    Ok(e.b)
}

/// Verdict from an existing sweep report.
pub fn probe_from_report(report: &SweepReport, user_b: Option<f64>) -> Result<ProbeReport> {
    let b = probe_gate(&report.params, user_b)?;
    let norms: Vec<Option<f64>> = report
        .entries
        .iter()
        .map(|e| e.summary.as_ref().and_then(|s| s.lb_norm))
        .collect();
    let available: Vec<f64> = norms.iter().flatten().copied().collect();
    if available.len() < 3 {
        return Err(Error::Precondition(format!(
            "the probe needs three successful sweep entries, got {}",
            available.len()
        )));
    }
    let last = &available[available.len() - 3..];
    let hi = last.iter().copied().fold(f64::MIN, f64::max);
    let lo = last.iter().copied().fold(f64::MAX, f64::min);
    let spread = if lo > 0.0 {
        hi / lo
    } else if hi == 0.0 {
        1.0
    } else {
        f64::INFINITY
    };
    Ok(ProbeReport {
        b,
        epsilons: report.epsilons.clone(),
        norms,
        spread,
        bounded: spread < PROBE_FACTOR,
    })
}

/// Runs the sweep and checks that `‖q‖_{L^b(Q)}` stays bounded as ε shrinks.
///
/// Refused before any run when `a ≥ 2/(d+1)`.
pub fn integrability_probe(plan: &SweepPlan) -> Result<(SweepReport, ProbeReport)> {
    probe_gate(&plan.params, plan.user_b)?;
    let report = eps_sweep(plan)?;
    let probe = probe_from_report(&report, plan.user_b)?;
    Ok((report, probe))
}

// ---------------------------------------------------------------------------
// extrapolation

#[derive(Clone, Debug, PartialEq)]
pub struct Extrapolation {
    pub field: ScalarField,
    /// `‖ū₂₃ − ū₁₂‖₂` between the limits predicted by the two last pairs.
    pub defect: f64,
    pub epsilons: [f64; 3],
    pub degenerate: bool,
}

fn first_order_limit(
    e_big: f64,
    u_big: &ScalarField,
    e_small: f64,
    u_small: &ScalarField,
) -> ScalarField {
    // u_ε = u* + ε v  ⇒  u* = (e_big u_small − e_small u_big)/(e_big − e_small)
    let w = 1.0 / (e_big - e_small);
    u_small.scale(e_big * w).add_scaled(-e_small * w, u_big)
}

/// First-order extrapolation to `ε = 0` from three `(ε, u_ε)` samples with
/// strictly decreasing ε.
pub fn richardson_from_samples(samples: &[(f64, &ScalarField)]) -> Result<Extrapolation> {
    if samples.len() < 3 {
        return Err(Error::Precondition(format!(
            "extrapolation needs three samples, got {}",
            samples.len()
        )));
    }
    let s = &samples[samples.len() - 3..];
    let (e1, u1) = s[0];
    let (e2, u2) = s[1];
    let (e3, u3) = s[2];
    if !(e1 > e2 && e2 > e3) {
        return Err(Error::InvalidParameter(
            "extrapolation needs decreasing epsilons".into(),
        ));
    }
    let epsilons = [e1, e2, e3];
    let d12 = u1.add_scaled(-1.0, u2).l2_norm();
    let d23 = u2.add_scaled(-1.0, u3).l2_norm();
    if d12 == 0.0 && d23 == 0.0 {
        return Ok(Extrapolation {
            field: u3.clone(),
            defect: 0.0,
            epsilons,
            degenerate: true,
        });
    }
    let fine = first_order_limit(e2, u2, e3, u3);
    let coarse = first_order_limit(e1, u1, e2, u2);
    let defect = fine.add_scaled(-1.0, &coarse).l2_norm();
    Ok(Extrapolation {
        field: fine,
        defect,
        epsilons,
        degenerate: false,
    })
}

/// Extrapolates the final fields of the last three successful entries.
pub fn richardson_limit(report: &SweepReport) -> Result<Extrapolation> {
    let samples: Vec<(f64, &ScalarField)> = report
        .epsilons
        .iter()
        .zip(&report.final_fields)
        .filter_map(|(&e, f)| f.as_ref().map(|f| (e, f)))
        .collect();
    richardson_from_samples(&samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{
        scenario_poiseuille, scenario_random_smooth, scenario_zero, PressureDrop,
    };

    fn params(d: usize, a: f64) -> ModelParams {
        ModelParams {
            a,
            epsilon: 0.1,
            d,
            length: 1.0,
            u_bound: 0.9,
        }
    }

    fn config(dt: f64, t_end: f64) -> SolverConfig {
        SolverConfig {
            dt,
            t_end,
            ..Default::default()
        }
    }

    #[test]
    fn default_sequence() {
        let e = default_epsilons();
        assert_eq!(e.len(), 10);
        assert_eq!(e[0], 0.1);
        assert!(e.windows(2).all(|w| w[1] == 0.5 * w[0]));
        assert!(*e.last().unwrap() >= 1e-4 && e.last().unwrap() * 0.5 < 1e-4);
    }

    #[test]
    fn plan_validation() {
        let p = params(1, 1.0);
        let grid = PeriodicGrid::uniform(1, 8, 1.0).unwrap();
        let mut plan = SweepPlan::new(scenario_zero(&p), p, grid, config(0.1, 0.2));
        assert!(plan.validate().is_ok());
        plan.epsilons = vec![0.1, 0.1];
        assert!(plan.validate().is_err());
        plan.epsilons = vec![0.1, -0.05];
        assert!(plan.validate().is_err());
        plan.epsilons = vec![];
        assert!(eps_sweep(&plan).is_err());
    }

    #[test]
    fn zero_data_sweep_is_zero() {
        let p = params(2, 0.5);
        let grid = PeriodicGrid::uniform(2, 8, 1.0).unwrap();
        let plan = SweepPlan::new(scenario_zero(&p), p, grid, config(0.05, 0.1));
        let report = eps_sweep(&plan).unwrap();
        assert!(report.cauchy.iter().all(|c| *c == Some(0.0)));
        for s in report.summaries() {
            assert_eq!(s.residual, 0.0);
            assert_eq!(s.predicted_residual, 0.0);
        }
        let ex = richardson_limit(&report).unwrap();
        assert!(ex.degenerate);
        assert_eq!(ex.defect, 0.0);
        assert_eq!(ex.field.max_abs(), 0.0);
    }

    #[test]
    fn residual_tracks_epsilon() {
        let p = params(1, 1.0);
        let grid = PeriodicGrid::uniform(1, 64, 1.0).unwrap();
        // max|q| only settles once εq ≪ 1 − U, so keep the slope moderate
        let s = scenario_random_smooth(&p, 5, 0.5, 0.5).unwrap();
        let mut plan = SweepPlan::new(s, p, grid, config(0.01, 0.05));
        plan.epsilons = vec![0.04, 0.02, 0.01, 0.005];
        let report = eps_sweep(&plan).unwrap();
        for s in report.summaries() {
            let tol = plan.config.newton_tol * (1.0 + s.max_q);
            assert!(s.identity_defect <= tol, "{s:?}");
            assert!((s.residual - s.predicted_residual).abs() <= tol);
        }
        for r in report.residual_ratios() {
            let r = r.unwrap();
            assert!((0.4..=0.6).contains(&r), "{r}");
        }
    }

    #[test]
    fn concurrent_and_sequential_sweeps_agree() {
        let p = params(2, 0.5);
        let grid = PeriodicGrid::uniform(2, 12, 1.0).unwrap();
        let s = scenario_random_smooth(&p, 9, 0.95, 0.3).unwrap();
        let mut plan = SweepPlan::new(s, p, grid, config(0.01, 0.03));
        plan.epsilons = vec![0.1, 0.05, 0.025];
        let par = eps_sweep(&plan).unwrap();
        plan.concurrent = false;
        let seq = eps_sweep(&plan).unwrap();
        assert_eq!(par, seq);
        let mut a = Vec::new();
        let mut b = Vec::new();
        par.write_json(&mut a).unwrap();
        seq.write_json(&mut b).unwrap();
        assert_eq!(a, b);
        let echoed: serde_json::Value = serde_json::from_slice(&a).unwrap();
        assert_eq!(echoed["grid"]["n"][0], 12);
        assert_eq!(echoed["entries"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn failing_entry_is_isolated() {
        let p = params(1, 1.0);
        let grid = PeriodicGrid::uniform(1, 32, 1.0).unwrap();
        let s = scenario_random_smooth(&p, 4, 0.9, 1.0).unwrap();
        // the forward Euler bound εh²/2 admits dt only for the larger epsilon
        let dt = 1e-4;
        let mut plan = SweepPlan::new(
            s,
            p,
            grid,
            SolverConfig {
                scheme: crate::solver::Scheme::Explicit,
                ..config(dt, 10.0 * dt)
            },
        );
        plan.epsilons = vec![1.0, 1e-2];
        let report = eps_sweep(&plan).unwrap();
        assert!(report.entries[0].summary.is_some());
        let failed = &report.entries[1];
        assert!(failed.summary.is_none());
        let msg = failed.error.as_ref().unwrap();
        assert!(
            msg.contains("epsilon") && msg.contains("stability"),
            "{msg}"
        );
        assert_eq!(report.cauchy, vec![None]);
    }

    #[test]
    fn poiseuille_sweep_is_flat() {
        let p = params(1, 1.0);
        let grid = PeriodicGrid::uniform(1, 32, 1.0).unwrap();
        let s = scenario_poiseuille(&p, PressureDrop::Constant { gamma: 1.0 }).unwrap();
        let mut plan = SweepPlan::new(s, p, grid, config(0.05, 0.2));
        plan.epsilons = vec![0.1, 0.05, 0.025, 0.0125];
        let report = eps_sweep(&plan).unwrap();
        // the velocity is uniform for every epsilon; only CG rounding differs
        assert!(
            report.cauchy.iter().all(|c| c.unwrap() < 1e-14),
            "{:?}",
            report.cauchy
        );
        let ex = richardson_limit(&report).unwrap();
        assert!(ex.defect < 1e-12);
        assert!((ex.field.values()[0] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn extrapolation_recovers_linear_family() {
        let grid = PeriodicGrid::uniform(2, 8, 1.0).unwrap();
        let star = ScalarField::from_fn(grid, |x| (x[0] * 3.0).sin() + x[1]);
        let v = ScalarField::from_fn(grid, |x| (x[1] * 5.0).cos());
        let eps = [0.1, 0.05, 0.02];
        let fields: Vec<ScalarField> = eps.iter().map(|&e| star.add_scaled(e, &v)).collect();
        let samples: Vec<(f64, &ScalarField)> = eps.iter().copied().zip(fields.iter()).collect();
        let ex = richardson_from_samples(&samples).unwrap();
        assert!(ex.field.add_scaled(-1.0, &star).max_abs() < 1e-10);
        assert!(ex.defect < 1e-10);
        assert!(!ex.degenerate);
        // a quadratic term shows up in the defect
        let bent: Vec<ScalarField> = eps
            .iter()
            .map(|&e| star.add_scaled(e, &v).add_scaled(e * e * 10.0, &v))
            .collect();
        let samples: Vec<(f64, &ScalarField)> = eps.iter().copied().zip(bent.iter()).collect();
        assert!(richardson_from_samples(&samples).unwrap().defect > 1e-3);
        assert!(richardson_from_samples(&samples[..2]).is_err());
    }

    #[test]
    fn probe_gate_and_one_dimensional_verdict() {
        let p = params(2, 1.0);
        let grid = PeriodicGrid::uniform(2, 8, 1.0).unwrap();
        let plan = SweepPlan::new(scenario_zero(&p), p, grid, config(0.1, 0.2));
        assert!(matches!(
            integrability_probe(&plan),
            Err(Error::Precondition(_))
        ));

        let p = params(1, 0.5);
        let grid = PeriodicGrid::uniform(1, 64, 1.0).unwrap();
        let s = scenario_random_smooth(&p, 12, 0.5, 0.5).unwrap();
        let mut plan = SweepPlan::new(s, p, grid, config(0.01, 0.05));
        plan.epsilons = vec![1e-2, 1e-3, 1e-4];
        plan.user_b = Some(4.0);
        let (report, probe) = integrability_probe(&plan).unwrap();
        assert_eq!(report.lb_exponent, Some(4.0));
        assert_eq!(probe.b, 4.0);
        assert!(probe.bounded, "{probe:?}");
    }
}
