//! Time stepping of the regularized system `∂ₜu − div q = g`, `∇u = f^ε(q)`.
//!
//! The primary scheme is backward Euler in `u`, with the flux eliminated
//! through `q = (f^ε)^{-1}(∇u)`:
//!
//! ```text
//! u^{n+1} − Δt · div (f^ε)^{-1}(∇u^{n+1}) = u^n + Δt · g(t_{n+1})
//! ```
//!
//! The step is solved by damped Newton; each linearization is the SPD
//! operator `I − Δt · div((A(q) + εI)^{-1} ∇·)` and is inverted by
//! preconditioned conjugate gradients. Forward Euler is kept as a reference
//! scheme under its diffusive stability bound `Δt ≤ ε h² / (2d)`.

mod newton;

pub use newton::{newton_inner_solve, LinearSolve, Linearization};

use serde::{Deserialize, Serialize};

use crate::constitutive::{invert_map, map_f_eps, ModelParams};
use crate::diagnostics::{self, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::grid::{divergence, gradient, same_grid, PeriodicGrid, ScalarField, VectorField};
use crate::scenario::Scenario;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Implicit,
    Explicit,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "implicit" => Ok(Scheme::Implicit),
            "explicit" => Ok(Scheme::Explicit),
            other => Err(Error::Config(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    /// Newton stops once `‖R‖₂ ≤ newton_tol · (‖u^n‖₂ + Δt ‖g‖₂)`.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Relative residual target of the inner CG solve.
    pub linear_tol: f64,
    /// Store a snapshot and a diagnostics record every this many steps.
    pub record_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 0.1,
            scheme: Scheme::Implicit,
            newton_tol: 1e-10,
            newton_max_iter: 50,
            linear_tol: 1e-12,
            record_every: 1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dt must be > 0, got {}",
                self.dt
            )));
        }
        if !(self.t_end >= self.dt) || !self.t_end.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "t_end must be >= dt, got t_end = {} and dt = {}",
                self.t_end, self.dt
            )));
        }
        if !(self.newton_tol > 0.0 && self.linear_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "tolerances must be positive".into(),
            ));
        }
        if self.newton_max_iter == 0 || self.record_every == 0 {
            return Err(Error::InvalidParameter(
                "newton_max_iter and record_every must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Number of steps to reach `t_end`; the last one may be shortened.
    pub fn step_count(&self) -> usize {
        ((self.t_end / self.dt) - 1e-9).ceil().max(1.0) as usize
    }
}

/// Solution at one time level; `∇u = f^ε(q)` holds pointwise.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub t: f64,
    pub u: ScalarField,
    pub q: VectorField,
}

impl State {
    pub fn grid(&self) -> &PeriodicGrid {
        self.u.grid()
    }

    /// `max_x |∇u − f(q) − εq|`.
    pub fn constitutive_defect(&self, params: &ModelParams) -> f64 {
        let grad = gradient(&self.u);
        (0..self.grid().len())
            .map(|i| {
                let q = self.q.at(i);
                (grad.at(i) - map_f_eps(&q, params.a, params.epsilon)).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// A stored time level with the forcing used by the step that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub state: State,
    pub forcing: ScalarField,
}

/// Per-step energy bookkeeping, kept for every step regardless of the
/// record cadence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepEnergy {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    /// `‖u^{n+1}‖₂²`
    pub l2_u: f64,
    /// `∫ q · f^ε(q)` at the new level
    pub dissipation: f64,
    /// `∫ g u^{n+1}`
    pub forcing_work: f64,
    /// `‖g‖₂²`
    pub forcing_l2_sq: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub steps: usize,
    pub newton_iterations: usize,
    pub linear_iterations: usize,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub scenario_id: String,
    pub params: ModelParams,
    pub config: SolverConfig,
    pub snapshots: Vec<Snapshot>,
    pub diagnostics: Vec<DiagnosticsRecord>,
    /// `‖u⁰‖₂²` followed by one entry per step.
    pub initial_l2_u: f64,
    pub energy: Vec<StepEnergy>,
    pub stats: RunStats,
}

impl Trajectory {
    pub fn grid(&self) -> &PeriodicGrid {
        self.snapshots[0].state.grid()
    }

    pub fn final_state(&self) -> &State {
        &self
            .snapshots
            .last()
            .expect("trajectory has an initial state")
            .state
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.state.t).collect()
    }
}

/// Flux `q(0)` with `∇u₀ = f^ε(q(0))`.
pub fn initial_flux(u0: &ScalarField, params: &ModelParams) -> Result<VectorField> {
    let (a, eps) = (params.a, params.epsilon);
    gradient(u0).try_map_points(|y| invert_map(y, a, eps))
}

fn flux_of(u: &ScalarField, params: &ModelParams) -> Result<VectorField> {
    initial_flux(u, params)
}

/// Newton convergence record of one implicit step.
#[derive(Clone, Debug, Default)]
pub struct NewtonTrace {
    /// `‖R‖₂` before each Newton update and after the last one.
    pub residuals: Vec<f64>,
    pub damping: Vec<f64>,
    pub linear_iterations: usize,
    pub tolerance: f64,
}

/// One backward Euler step.
pub fn step_implicit(
    state: &State,
    g_next: &ScalarField,
    params: &ModelParams,
    config: &SolverConfig,
) -> Result<State> {
    step_implicit_traced(state, g_next, params, config, config.dt).map(|(s, _)| s)
}

/// [`step_implicit`] with an explicit step length and the Newton history.
pub fn step_implicit_traced(
    state: &State,
    g_next: &ScalarField,
    params: &ModelParams,
    config: &SolverConfig,
    dt: f64,
) -> Result<(State, NewtonTrace)> {
    if !(params.epsilon > 0.0) {
        return Err(Error::InvalidParameter(
            "implicit stepping requires epsilon > 0; reach epsilon -> 0 through continuation"
                .into(),
        ));
    }
    same_grid(state.grid(), g_next.grid())?;

    let mut rhs = state.u.clone();
    rhs.axpy(dt, g_next);
    let residual_of = |u: &ScalarField, q: &VectorField| -> ScalarField {
        let mut r = u.add_scaled(-dt, &divergence(q));
        r.axpy(-1.0, &rhs);
        r
    };

    let scale = state.u.l2_norm() + dt * g_next.l2_norm();
    let tol = config.newton_tol * scale;
    let mut trace = NewtonTrace {
        tolerance: tol,
        ..Default::default()
    };

    let mut u = state.u.clone();
    let mut q = flux_of(&u, params)?;
    let mut r = residual_of(&u, &q);
    let mut r_norm = r.l2_norm();
    trace.residuals.push(r_norm);

    for _ in 0..config.newton_max_iter {
        if r_norm <= tol {
            return Ok((
                State {
                    t: state.t + dt,
                    u,
                    q,
                },
                trace,
            ));
        }
        let lin = Linearization::at_flux(&q, params, dt);
        let solve = newton_inner_solve(&lin, &r.scale(-1.0), config.linear_tol)?;
        trace.linear_iterations += solve.iterations;
        let delta = solve.solution;

        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let u_try = u.add_scaled(lambda, &delta);
            let q_try = flux_of(&u_try, params)?;
            let r_try = residual_of(&u_try, &q_try);
            let n_try = r_try.l2_norm();
            if n_try < r_norm {
                accepted = Some((u_try, q_try, r_try, n_try));
                break;
            }
            lambda *= 0.5;
        }
        let Some((u_new, q_new, r_new, n_new)) = accepted else {
            return Err(Error::NoConvergence {
                what: "Newton line search",
                iterations: trace.residuals.len(),
                residual: r_norm,
            });
        };
        trace.damping.push(lambda);
        u = u_new;
        q = q_new;
        r = r_new;
        r_norm = n_new;
        trace.residuals.push(r_norm);
    }
    if r_norm <= tol {
        return Ok((
            State {
                t: state.t + dt,
                u,
                q,
            },
            trace,
        ));
    }
    Err(Error::NoConvergence {
        what: "Newton iteration",
        iterations: config.newton_max_iter,
        residual: r_norm,
    })
}

/// Largest stable forward Euler step, `ε h_min² / (2d)`.
pub fn explicit_dt_bound(grid: &PeriodicGrid, params: &ModelParams) -> f64 {
    let h_min = (0..grid.dim())
        .map(|j| grid.h(j))
        .fold(f64::INFINITY, f64::min);
    params.epsilon * h_min * h_min / (2.0 * grid.dim() as f64)
}

/// One forward Euler step `u^{n+1} = u^n + Δt (div q^n + g^n)`.
pub fn step_explicit(
    state: &State,
    g: &ScalarField,
    params: &ModelParams,
    config: &SolverConfig,
) -> Result<State> {
    step_explicit_with_dt(state, g, params, config.dt)
}

fn step_explicit_with_dt(
    state: &State,
    g: &ScalarField,
    params: &ModelParams,
    dt: f64,
) -> Result<State> {
    same_grid(state.grid(), g.grid())?;
    let bound = explicit_dt_bound(state.grid(), params);
    if dt > bound {
        return Err(Error::StabilityViolation { dt, bound });
    }
    let mut u = state.u.add_scaled(dt, &divergence(&state.q));
    u.axpy(dt, g);
    let q = flux_of(&u, params)?;
    Ok(State {
        t: state.t + dt,
        u,
        q,
    })
}

/// Integrates `scenario` from `t = 0` to `config.t_end` on `grid`.
pub fn run(
    scenario: &Scenario,
    params: &ModelParams,
    grid: &PeriodicGrid,
    config: &SolverConfig,
) -> Result<Trajectory> {
    params.validate()?;
    config.validate()?;
    if grid.dim() != params.d {
        return Err(Error::GridMismatch(format!(
            "grid dimension {} differs from model dimension {}",
            grid.dim(),
            params.d
        )));
    }
    let lb_exponent = diagnostics::flux_exponent(params, None).usable();

    let u0 = scenario.initial(grid)?;
    let q0 = initial_flux(&u0, params).map_err(|e| e.at_time(0.0))?;
    let initial = State {
        t: 0.0,
        u: u0,
        q: q0,
    };
    let first = Snapshot {
        step: 0,
        forcing: scenario.forcing(0.0, grid)?,
        state: initial,
    };

    let mut traj = Trajectory {
        scenario_id: scenario.id().to_string(),
        params: *params,
        config: *config,
        diagnostics: vec![diagnostics::record(
            &first.state,
            None,
            params,
            lb_exponent,
        )?],
        initial_l2_u: first.state.u.l2_norm_sq(),
        snapshots: vec![first],
        energy: Vec::new(),
        stats: RunStats::default(),
    };

    let steps = config.step_count();
    let mut current = traj.snapshots[0].state.clone();
    for step in 1..=steps {
        let dt = config
            .dt
            .min(config.t_end - current.t)
            .max(config.dt * 1e-9);
        let t_next = if step == steps {
            config.t_end
        } else {
            current.t + dt
        };
        let (next, forcing) = match config.scheme {
            Scheme::Implicit => {
                let g = scenario
                    .forcing(t_next, grid)
                    .map_err(|e| e.at_time(t_next))?;
                let (s, trace) = step_implicit_traced(&current, &g, params, config, dt)
                    .map_err(|e| e.at_time(t_next))?;
                traj.stats.newton_iterations += trace.residuals.len() - 1;
                traj.stats.linear_iterations += trace.linear_iterations;
                (s, g)
            }
            Scheme::Explicit => {
                let g = scenario
                    .forcing(current.t, grid)
                    .map_err(|e| e.at_time(current.t))?;
                let s = step_explicit_with_dt(&current, &g, params, dt)
                    .map_err(|e| e.at_time(t_next))?;
                (s, g)
            }
        };
        let next = State { t: t_next, ..next };
        traj.energy.push(StepEnergy {
            step,
            t: t_next,
            dt,
            l2_u: next.u.l2_norm_sq(),
            dissipation: diagnostics::dissipation(&next.q, params),
            forcing_work: forcing.inner(&next.u),
            forcing_l2_sq: forcing.l2_norm_sq(),
        });
        traj.stats.steps = step;

        if step % config.record_every == 0 || step == steps {
            let prev = &traj.snapshots.last().expect("non-empty").state;
            let rec = diagnostics::record(&next, Some(prev), params, lb_exponent)?;
            traj.diagnostics.push(rec);
            traj.snapshots.push(Snapshot {
                step,
                state: next.clone(),
                forcing,
            });
        }
        current = next;
    }
    Ok(traj)
}

#[cfg(test)]
mod tests;
