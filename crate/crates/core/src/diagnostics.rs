//! A-priori estimate quantities tracked along a trajectory.
//!
//! Every record is assembled from pointwise integrands and [`integrate`]-style
//! `h^d` sums, with the weighted seminorms taken in the scalar product
//! generated by `A(q)` at the current flux.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::constitutive::{
    jacobian_a, map_f_eps, radial_weight, ModelParams, TruncationPair, Vector,
};
use crate::error::{Error, Result};
use crate::grid::{gradient, same_grid, ScalarField, VectorField};
use crate::solver::{State, Trajectory};

/// One time slice of the tracked estimate quantities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// `‖u‖₂²`
    pub l2_u: f64,
    /// `∫ |q|² / (1+|q|^a)^{1/a}`
    pub energy_flux: f64,
    /// `ε ∫ |q|²`
    pub eps_flux: f64,
    /// `∫ |q|`
    pub l1_q: f64,
    /// `max |∇u|`
    pub sup_grad_u: f64,
    /// `Σ_s ∫ ‖∂_s q‖²_{A(q)}`
    pub weighted_grad_q: f64,
    /// `ε Σ_s ∫ |∂_s q|²`
    pub eps_grad_q: f64,
    /// `∫ |∇²u|²`
    pub hess_u: f64,
    /// `∫ ‖δ_τ q‖²_{A(q)}`, absent without a previous state
    pub weighted_dt_q: Option<f64>,
    /// `∫ |q|^b`, absent when no admissible exponent is available
    pub lb_q: Option<f64>,
}

pub const LEDGER_COLUMNS: [&str; 11] = [
    "t",
    "l2_u",
    "energy_flux",
    "eps_flux",
    "l1_q",
    "sup_grad_u",
    "weighted_grad_q",
    "eps_grad_q",
    "hess_u",
    "weighted_dt_q",
    "lb_q",
];

impl DiagnosticsRecord {
    fn columns(&self) -> [Option<f64>; 11] {
        [
            Some(self.t),
            Some(self.l2_u),
            Some(self.energy_flux),
            Some(self.eps_flux),
            Some(self.l1_q),
            Some(self.sup_grad_u),
            Some(self.weighted_grad_q),
            Some(self.eps_grad_q),
            Some(self.hess_u),
            self.weighted_dt_q,
            self.lb_q,
        ]
    }

    /// `∫|∇q|²` recovered from the ε-scaled entry.
    pub fn grad_q_sq(&self, epsilon: f64) -> f64 {
        self.eps_grad_q / epsilon
    }
}

/// `∫ q · f^ε(q)`, the dissipation rate of `½‖u‖²`.
pub fn dissipation(q: &VectorField, params: &ModelParams) -> f64 {
    let grid = q.grid();
    (0..grid.len())
        .map(|i| {
            let v = q.at(i);
            v.dot(&map_f_eps(&v, params.a, params.epsilon))
        })
        .sum::<f64>()
        * grid.cell_volume()
}

/// Forward difference of the flux along `axis` at node `i`.
fn flux_difference(q: &VectorField, i: usize, axis: usize) -> Vector {
    let g = q.grid();
    (q.at(g.forward(i, axis)) - q.at(i)).scale(1.0 / g.h(axis))
}

pub fn record(
    state: &State,
    prev: Option<&State>,
    params: &ModelParams,
    lb_exponent: Option<f64>,
) -> Result<DiagnosticsRecord> {
    let grid = *state.grid();
    same_grid(&grid, state.q.grid())?;
    if let Some(p) = prev {
        same_grid(&grid, p.grid())?;
    }
    let vol = grid.cell_volume();
    let (a, eps) = (params.a, params.epsilon);
    let d = grid.dim();
    let grad_u = gradient(&state.u);

    let mut rec = DiagnosticsRecord {
        t: state.t,
        l2_u: state.u.l2_norm_sq(),
        energy_flux: 0.0,
        eps_flux: 0.0,
        l1_q: 0.0,
        sup_grad_u: 0.0,
        weighted_grad_q: 0.0,
        eps_grad_q: 0.0,
        hess_u: 0.0,
        weighted_dt_q: None,
        lb_q: lb_exponent.map(|_| 0.0),
    };
    let mut dt_sum = 0.0;
    let tau = prev.map(|p| state.t - p.t);
    if let Some(tau) = tau {
        if !(tau > 0.0) {
            return Err(Error::Precondition(format!(
                "previous state must be strictly earlier (dt = {tau})"
            )));
        }
    }

    for i in 0..grid.len() {
        let q = state.q.at(i);
        let s = q.norm();
        let metric = jacobian_a(&q, a);
        rec.energy_flux += s * s * radial_weight(s, a);
        rec.eps_flux += eps * s * s;
        rec.l1_q += s;
        rec.sup_grad_u = rec.sup_grad_u.max(grad_u.at(i).norm());
        for axis in 0..d {
            let dq = flux_difference(&state.q, i, axis);
            rec.weighted_grad_q += metric.inner(&dq, &dq);
            rec.eps_grad_q += eps * dq.norm_sq();
        }
        if let (Some(p), Some(tau)) = (prev, tau) {
            let dq = (q - p.q.at(i)).scale(1.0 / tau);
            dt_sum += metric.inner(&dq, &dq);
        }
        if let (Some(b), Some(acc)) = (lb_exponent, rec.lb_q.as_mut()) {
            *acc += s.powf(b);
        }
    }
    rec.hess_u = hessian_sq(&state.u);
    rec.energy_flux *= vol;
    rec.eps_flux *= vol;
    rec.l1_q *= vol;
    rec.weighted_grad_q *= vol;
    rec.eps_grad_q *= vol;
    if tau.is_some() {
        rec.weighted_dt_q = Some(dt_sum * vol);
    }
    if let Some(acc) = rec.lb_q.as_mut() {
        *acc *= vol;
    }
    Ok(rec)
}

/// `Σ_{j,k} ∫ (D_j^- D_k^+ u)²`; the diagonal terms compose to the Laplacian stencil.
fn hessian_sq(u: &ScalarField) -> f64 {
    let grid = *u.grid();
    let d = grid.dim();
    let grad = gradient(u);
    let mut total = 0.0;
    for k in 0..d {
        let c = grad.component(k);
        for j in 0..d {
            let inv_h = 1.0 / grid.h(j);
            total += (0..grid.len())
                .map(|i| ((c[i] - c[grid.backward(i, j)]) * inv_h).powi(2))
                .sum::<f64>();
        }
    }
    total * grid.cell_volume()
}

// ---------------------------------------------------------------------------
// flux exponent

/// Integrability exponent `b` of the flux and whether `a < 2/(d+1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxExponent {
    pub b: f64,
    pub valid: bool,
    /// In one dimension `b` is a free choice.
    pub arbitrary: bool,
}

impl FluxExponent {
    pub fn usable(&self) -> Option<f64> {
        self.valid.then_some(self.b)
    }
}

/// Default exponent when `d = 1` and the caller names none.
pub const DEFAULT_1D_EXPONENT: f64 = 2.0;

/// `b = (1−a)(d+1)/(d−1)` for `d ≥ 2`, caller's choice for `d = 1`;
/// valid iff `a < 2/(d+1)`.
pub fn flux_exponent(params: &ModelParams, user_b: Option<f64>) -> FluxExponent {
    let d = params.d as f64;
    let valid = params.a < 2.0 / (d + 1.0);
    if params.d == 1 {
        FluxExponent {
            b: user_b.unwrap_or(DEFAULT_1D_EXPONENT),
            valid,
            arbitrary: true,
        }
    } else {
        FluxExponent {
            b: (1.0 - params.a) * (d + 1.0) / (d - 1.0),
            valid,
            arbitrary: false,
        }
    }
}

// ---------------------------------------------------------------------------
// energy ledger

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LedgerFailure {
    /// `‖u^{n+1}‖² + 2Δt D ≤ ‖u^n‖² + 2Δt ∫g u^{n+1}` violated.
    Inequality,
    /// Stored state disagrees with the per-step energy log.
    StateMismatch,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub step: usize,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub failure: Option<LedgerFailure>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub entries: Vec<LedgerEntry>,
    /// `sup_n ‖u^n‖² + 2 Σ Δt D^n`
    pub accumulated_lhs: f64,
    /// Discrete Gronwall bound from `‖u⁰‖²` and `Σ Δt ‖g‖²`.
    pub data_bound: f64,
    /// `‖u^n‖²` never increased.
    pub l2_monotone: bool,
}

impl EnergyReport {
    pub fn failures(&self) -> impl Iterator<Item = &LedgerEntry> {
        self.entries.iter().filter(|e| e.failure.is_some())
    }

    pub fn passed(&self) -> bool {
        self.failures().next().is_none() && self.accumulated_lhs <= self.data_bound
    }
}

pub const ENERGY_SLACK: f64 = 1e-10;

/// Replays the per-step energy inequality of the implicit scheme.
pub fn energy_ledger_check(traj: &Trajectory, _params: &ModelParams) -> EnergyReport {
    let mut entries = Vec::with_capacity(traj.energy.len() + traj.snapshots.len());
    let mut prev_l2 = traj.initial_l2_u;
    let mut sup = prev_l2;
    let mut dissipated = 0.0;
    let mut forcing_budget = traj.initial_l2_u;
    let mut monotone = true;
    let mut max_dt: f64 = 0.0;
    let mut horizon = 0.0;

    for e in &traj.energy {
        let lhs = e.l2_u + 2.0 * e.dt * e.dissipation;
        let rhs = prev_l2 + 2.0 * e.dt * e.forcing_work;
        let slack = ENERGY_SLACK * (prev_l2 + 2.0 * e.dt * e.forcing_work.abs());
        entries.push(LedgerEntry {
            step: e.step,
            t: e.t,
            lhs,
            rhs,
            failure: (lhs > rhs + slack).then_some(LedgerFailure::Inequality),
        });
        if e.l2_u > prev_l2 * (1.0 + ENERGY_SLACK) {
            monotone = false;
        }
        sup = sup.max(e.l2_u);
        dissipated += 2.0 * e.dt * e.dissipation;
        forcing_budget += e.dt * e.forcing_l2_sq;
        max_dt = max_dt.max(e.dt);
        horizon += e.dt;
        prev_l2 = e.l2_u;
    }

    // stored states must agree with the log they claim to come from
    for snap in &traj.snapshots {
        let logged = if snap.step == 0 {
            traj.initial_l2_u
        } else {
            match traj.energy.get(snap.step - 1) {
                Some(e) => e.l2_u,
                None => f64::NAN,
            }
        };
        let actual = snap.state.u.l2_norm_sq();
        if !((actual - logged).abs() <= 1e-12 * actual.max(logged).max(f64::MIN_POSITIVE)) {
            entries.push(LedgerEntry {
                step: snap.step,
                t: snap.state.t,
                lhs: actual,
                rhs: logged,
                failure: Some(LedgerFailure::StateMismatch),
            });
        }
    }

    let n = traj.energy.len() as i32;
    let growth = if max_dt < 1.0 {
        (1.0 - max_dt).powi(-n)
    } else {
        f64::INFINITY
    };
    EnergyReport {
        entries,
        accumulated_lhs: sup + dissipated,
        data_bound: forcing_budget * (1.0 + (1.0 + horizon) * growth),
        l2_monotone: monotone,
    }
}

// ---------------------------------------------------------------------------
// initial flux bound

/// `U / (1 − U^a)^{1/a}`, the largest `|q(0)|` compatible with `|∇u₀| ≤ U`.
pub fn initial_flux_bound(u_bound: f64, a: f64) -> f64 {
    if u_bound == 0.0 {
        return 0.0;
    }
    u_bound / (-(a * u_bound.ln()).exp_m1()).powf(1.0 / a)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialBoundCheck {
    pub max_flux: f64,
    pub threshold: f64,
    pub passed: bool,
}

pub fn initial_bound_check(q0: &VectorField, params: &ModelParams) -> InitialBoundCheck {
    let threshold = initial_flux_bound(params.u_bound, params.a);
    let max_flux = q0.max_norm();
    InitialBoundCheck {
        max_flux,
        threshold,
        passed: max_flux <= threshold * (1.0 + 1e-10),
    }
}

// ---------------------------------------------------------------------------
// renormalized formulation

/// A test function with its gradient at the flux locations.
#[derive(Clone, Debug)]
pub struct TestFunction {
    pub values: ScalarField,
    pub gradient: VectorField,
}

impl TestFunction {
    /// Periodic test function differentiated with the grid gradient.
    pub fn from_field(values: ScalarField) -> Self {
        let gradient = gradient(&values);
        Self { values, gradient }
    }

    /// Test function with an externally supplied gradient.
    pub fn with_gradient(values: ScalarField, gradient: VectorField) -> Result<Self> {
        same_grid(values.grid(), gradient.grid())?;
        Ok(Self { values, gradient })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenormalizationReport {
    /// `∫∫ ∂ₜu τ_k ψ`
    pub time_term: f64,
    /// `∫∫ q τ_k · ∇ψ`
    pub flux_term: f64,
    /// `∫∫ g τ_k ψ`
    pub forcing_term: f64,
    /// `∫∫ q · ∇τ_k ψ`
    pub commutator_term: f64,
    /// `time + flux − forcing + commutator`
    pub residual: f64,
    /// `∫∫ G_k(|q|)² / (1+|q|^a)^{1/a}`
    pub gk_weighted: f64,
    /// `∫∫_{|q|>k} |q|`
    pub tail_l1: f64,
}

/// Defect of the renormalized weak form tested with `τ_k(|q|) ψ`.
///
/// Time integrals use the right-endpoint rule over stored states, the
/// quadrature implied by backward Euler, so with a record cadence of one
/// step the defect is the Newton residual tested against `τ_k ψ`. The
/// commutator term pairs `D_j^+ τ_k` with `ψ` shifted forward along `j`,
/// which is the exact discrete product rule.
pub fn renormalization_residual(
    traj: &Trajectory,
    k: u32,
    psi: &TestFunction,
    params: &ModelParams,
) -> Result<RenormalizationReport> {
    let trunc = TruncationPair::new(k, params.a)?;
    renormalized(traj, Some(&trunc), psi, params)
}

/// The same defect with `τ_k ≡ 1`.
pub fn plain_weak_defect(
    traj: &Trajectory,
    psi: &TestFunction,
    params: &ModelParams,
) -> Result<f64> {
    renormalized(traj, None, psi, params).map(|r| r.residual)
}

fn renormalized(
    traj: &Trajectory,
    trunc: Option<&TruncationPair>,
    psi: &TestFunction,
    params: &ModelParams,
) -> Result<RenormalizationReport> {
    let grid = *traj.grid();
    same_grid(&grid, psi.values.grid())?;
    let vol = grid.cell_volume();
    let d = grid.dim();
    let psi_v = psi.values.values();
    let mut rep = RenormalizationReport {
        time_term: 0.0,
        flux_term: 0.0,
        forcing_term: 0.0,
        commutator_term: 0.0,
        residual: 0.0,
        gk_weighted: 0.0,
        tail_l1: 0.0,
    };

    for pair in traj.snapshots.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        let tau = cur.state.t - prev.state.t;
        let q = &cur.state.q;
        let cut: Vec<f64> = (0..grid.len())
            .map(|i| trunc.map_or(1.0, |tr| tr.tau(q.at(i).norm())))
            .collect();
        let du = cur.state.u.values();
        let du_prev = prev.state.u.values();
        let g = cur.forcing.values();
        let (mut time, mut flux, mut forcing, mut comm, mut gk, mut tail) =
            (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..grid.len() {
            let qi = q.at(i);
            time += (du[i] - du_prev[i]) * cut[i] * psi_v[i];
            flux += cut[i] * qi.dot(&psi.gradient.at(i));
            forcing += g[i] * cut[i] * psi_v[i];
            for j in 0..d {
                let fwd = grid.forward(i, j);
                comm += qi[j] * (cut[fwd] - cut[i]) / grid.h(j) * psi_v[fwd];
            }
            if let Some(tr) = trunc {
                let s = qi.norm();
                if s > f64::from(tr.k) {
                    tail += s;
                    gk += tr.g(s).powi(2) * radial_weight(s, params.a);
                }
            }
        }
        rep.time_term += time * vol;
        rep.flux_term += tau * flux * vol;
        rep.forcing_term += tau * forcing * vol;
        rep.commutator_term += tau * comm * vol;
        rep.gk_weighted += tau * gk * vol;
        rep.tail_l1 += tau * tail * vol;
    }
    rep.residual = rep.time_term + rep.flux_term - rep.forcing_term + rep.commutator_term;
    Ok(rep)
}

// ---------------------------------------------------------------------------
// ledger export

/// Writes the diagnostics ledger as comma-separated text.
pub fn write_ledger<W: Write>(records: &[DiagnosticsRecord], mut out: W) -> Result<()> {
    writeln!(out, "{}", LEDGER_COLUMNS.join(","))?;
    for rec in records {
        let row: Vec<String> = rec
            .columns()
            .iter()
            .map(|c| c.map(|v| format!("{v:.16e}")).unwrap_or_default())
            .collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Parses a ledger written by [`write_ledger`].
pub fn read_ledger<R: BufRead>(input: R) -> Result<Vec<DiagnosticsRecord>> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty ledger".into()))??;
    if header.trim() != LEDGER_COLUMNS.join(",") {
        return Err(Error::Format(format!(
            "unexpected ledger header `{header}`"
        )));
    }
    let mut out = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<Option<f64>> = line
            .split(',')
            .map(|c| {
                if c.is_empty() {
                    Ok(None)
                } else {
                    c.parse::<f64>()
                        .map(Some)
                        .map_err(|e| Error::Format(format!("bad ledger value `{c}`: {e}")))
                }
            })
            .collect::<Result<_>>()?;
        if cells.len() != LEDGER_COLUMNS.len() {
            return Err(Error::Format(format!(
                "ledger row has {} cells",
                cells.len()
            )));
        }
        let req = |i: usize| {
            cells[i].ok_or_else(|| Error::Format(format!("missing {}", LEDGER_COLUMNS[i])))
        };
        out.push(DiagnosticsRecord {
            t: req(0)?,
            l2_u: req(1)?,
            energy_flux: req(2)?,
            eps_flux: req(3)?,
            l1_q: req(4)?,
            sup_grad_u: req(5)?,
            weighted_grad_q: req(6)?,
            eps_grad_q: req(7)?,
            hess_u: req(8)?,
            weighted_dt_q: cells[9],
            lb_q: cells[10],
        });
    }
    Ok(out)
}
