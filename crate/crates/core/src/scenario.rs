//! Initial data and forcing samplers.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constitutive::{invert_map, jacobian_a, ModelParams, Vector};
use crate::error::{Error, Result};
use crate::grid::{divergence, gradient, PeriodicGrid, ScalarField};

type InitialFn = Arc<dyn Fn(&PeriodicGrid) -> Result<ScalarField> + Send + Sync>;
type TimeFieldFn = Arc<dyn Fn(f64, &PeriodicGrid) -> Result<ScalarField> + Send + Sync>;

/// Data `(u₀, g)` for one run. Samplers are evaluated on whatever grid the
/// solver uses, so one scenario serves a whole refinement study.
#[derive(Clone)]
pub struct Scenario {
    id: String,
    dim: usize,
    declared_u: Option<f64>,
    initial: InitialFn,
    forcing: TimeFieldFn,
    exact: Option<TimeFieldFn>,
}

impl fmt::Debug for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scenario")
            .field("id", &self.id)
            .field("dim", &self.dim)
            .field("declared_u", &self.declared_u)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl Scenario {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `sup|∇u₀|` the scenario was built to attain, if any.
    pub fn declared_u(&self) -> Option<f64> {
        self.declared_u
    }

    pub fn initial(&self, grid: &PeriodicGrid) -> Result<ScalarField> {
        self.check_grid(grid)?;
        (self.initial)(grid)
    }

    pub fn forcing(&self, t: f64, grid: &PeriodicGrid) -> Result<ScalarField> {
        self.check_grid(grid)?;
        (self.forcing)(t, grid)
    }

    /// Exact solution, when the scenario knows one.
    pub fn exact(&self, t: f64, grid: &PeriodicGrid) -> Option<Result<ScalarField>> {
        if let Err(e) = self.check_grid(grid) {
            return Some(Err(e));
        }
        self.exact.as_ref().map(|f| f(t, grid))
    }

    fn check_grid(&self, grid: &PeriodicGrid) -> Result<()> {
        if grid.dim() != self.dim {
            return Err(Error::GridMismatch(format!(
                "scenario `{}` is {}-dimensional, grid is {}-dimensional",
                self.id,
                self.dim,
                grid.dim()
            )));
        }
        Ok(())
    }
}

/// `u₀ ≡ 0`, `g ≡ 0`.
pub fn scenario_zero(params: &ModelParams) -> Scenario {
    Scenario {
        id: "zero".into(),
        dim: params.d,
        declared_u: Some(0.0),
        initial: Arc::new(|grid| Ok(ScalarField::zeros(*grid))),
        forcing: Arc::new(|_, grid| Ok(ScalarField::zeros(*grid))),
        exact: Some(Arc::new(|_, grid| Ok(ScalarField::zeros(*grid)))),
    }
}

// ---------------------------------------------------------------------------
// Poiseuille

/// Pressure drop as a function of time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum PressureDrop {
    Constant {
        gamma: f64,
    },
    /// `0` before `t_on`, `gamma` after.
    Step {
        gamma: f64,
        t_on: f64,
    },
    Sine {
        gamma: f64,
        omega: f64,
    },
}

impl PressureDrop {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            PressureDrop::Constant { gamma } => gamma,
            PressureDrop::Step { gamma, t_on } => {
                if t >= t_on {
                    gamma
                } else {
                    0.0
                }
            }
            PressureDrop::Sine { gamma, omega } => gamma * (omega * t).sin(),
        }
    }

    /// `∫₀ᵗ g`.
    pub fn integral(&self, t: f64) -> f64 {
        match *self {
            PressureDrop::Constant { gamma } => gamma * t,
            PressureDrop::Step { gamma, t_on } => gamma * (t - t_on).max(0.0),
            PressureDrop::Sine { gamma, omega } => {
                if omega == 0.0 {
                    0.0
                } else {
                    gamma * (1.0 - (omega * t).cos()) / omega
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            PressureDrop::Constant { gamma } => gamma.is_finite(),
            PressureDrop::Step { gamma, t_on } => gamma.is_finite() && t_on.is_finite(),
            PressureDrop::Sine { gamma, omega } => gamma.is_finite() && omega.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "non-finite pressure drop {self:?}"
            )))
        }
    }
}

/// Shear flow driven by a spatially constant pressure drop, `u₀ ≡ 0`.
///
/// On a periodic cell the velocity stays spatially uniform, `u = ∫g`, and
/// the shear stress vanishes.
pub fn scenario_poiseuille(params: &ModelParams, drop: PressureDrop) -> Result<Scenario> {
    if params.d != 1 {
        return Err(Error::GridMismatch(format!(
            "the Poiseuille scenario is one-dimensional, got d = {}",
            params.d
        )));
    }
    drop.validate()?;
    Ok(Scenario {
        id: "poiseuille".into(),
        dim: 1,
        declared_u: Some(0.0),
        initial: Arc::new(|grid| Ok(ScalarField::zeros(*grid))),
        forcing: Arc::new(move |t, grid| Ok(ScalarField::constant(*grid, drop.eval(t)))),
        exact: Some(Arc::new(move |t, grid| {
            Ok(ScalarField::constant(*grid, drop.integral(t)))
        })),
    })
}

// ---------------------------------------------------------------------------
// manufactured solutions

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeKind {
    /// `A(t) = a0 (1 + rate t)`
    Linear,
    /// `A(t) = a0 exp(rate t)`
    Exponential,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForcingMode {
    /// `g = ∂ₜu* − div Q(∇u*)` with exact derivatives at the nodes.
    Continuous,
    /// Same with the grid gradient and divergence, so that `u*` restricted
    /// to the grid solves the semi-discrete system exactly.
    SemiDiscrete,
}

/// `u*(t,x) = A(t) Π_j sin(2π x_j / L)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AmplitudeProfile {
    pub kind: AmplitudeKind,
    pub a0: f64,
    pub rate: f64,
    /// Largest time at which the forcing will be sampled.
    pub horizon: f64,
    pub forcing: ForcingMode,
}

impl Default for AmplitudeProfile {
    fn default() -> Self {
        Self {
            kind: AmplitudeKind::Linear,
            a0: 0.1,
            rate: 1.0,
            horizon: 1.0,
            forcing: ForcingMode::Continuous,
        }
    }
}

impl AmplitudeProfile {
    pub fn amplitude(&self, t: f64) -> f64 {
        match self.kind {
            AmplitudeKind::Linear => self.a0 * (1.0 + self.rate * t),
            AmplitudeKind::Exponential => self.a0 * (self.rate * t).exp(),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self.kind {
            AmplitudeKind::Linear => self.a0 * self.rate,
            AmplitudeKind::Exponential => self.a0 * self.rate * (self.rate * t).exp(),
        }
    }

    /// `sup_{[0, horizon]} |A|`; both profiles are monotone.
    pub fn max_amplitude(&self) -> f64 {
        self.amplitude(0.0)
            .abs()
            .max(self.amplitude(self.horizon).abs())
    }
}

fn sine_product(x: &Vector, d: usize, k: f64) -> f64 {
    (0..d).map(|j| (k * x[j]).sin()).product()
}

/// `u*` whose forcing is assembled so that it solves the regularized system.
pub fn scenario_manufactured(params: &ModelParams, profile: AmplitudeProfile) -> Result<Scenario> {
    params.validate()?;
    if !(profile.a0.is_finite() && profile.rate.is_finite())
        || !(profile.horizon >= 0.0 && profile.horizon.is_finite())
    {
        return Err(Error::InvalidParameter(format!(
            "bad amplitude profile {profile:?}"
        )));
    }
    let k = 2.0 * PI / params.length;
    // |∇u*| ≤ k |A|, attained on the grid-independent sine peaks
    let max_slope = k * profile.max_amplitude();
    if !max_slope.is_finite() {
        return Err(Error::InvalidParameter("amplitude overflows".into()));
    }
    if params.epsilon == 0.0 && max_slope >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "manufactured slope {max_slope} leaves the unit ball, which epsilon = 0 cannot invert"
        )));
    }
    let d = params.d;
    let (a, eps) = (params.a, params.epsilon);
    let shape = move |grid: &PeriodicGrid| ScalarField::from_fn(*grid, |x| sine_product(x, d, k));

    let forcing: TimeFieldFn = match profile.forcing {
        ForcingMode::Continuous => Arc::new(move |t, grid| {
            let amp = profile.amplitude(t);
            let damp = profile.derivative(t);
            let mut out = Vec::with_capacity(grid.len());
            for i in 0..grid.len() {
                let x = grid.position(i);
                let s: Vec<f64> = (0..d).map(|j| (k * x[j]).sin()).collect();
                let c: Vec<f64> = (0..d).map(|j| (k * x[j]).cos()).collect();
                let phi: f64 = s.iter().product();
                // ∇u* and the Hessian of u*
                let mut grad = [0.0; 2];
                let mut hess = [[0.0; 2]; 2];
                for j in 0..d {
                    let others: f64 = (0..d).filter(|&m| m != j).map(|m| s[m]).product();
                    grad[j] = amp * k * c[j] * others;
                    hess[j][j] = -amp * k * k * phi;
                    for m in 0..d {
                        if m != j {
                            let rest: f64 =
                                (0..d).filter(|&l| l != j && l != m).map(|l| s[l]).product();
                            hess[j][m] = amp * k * k * c[j] * c[m] * rest;
                        }
                    }
                }
                let q = invert_map(&Vector::from_slice(&grad[..d]), a, eps)?;
                let m = jacobian_a(&q, a).shifted_inverse(eps);
                let mut div_q = 0.0;
                for j in 0..d {
                    for l in 0..d {
                        div_q += m[j][l] * hess[j][l];
                    }
                }
                out.push(damp * phi - div_q);
            }
            ScalarField::from_values(*grid, out)
        }),
        ForcingMode::SemiDiscrete => Arc::new(move |t, grid| {
            let base = shape(grid);
            let u = base.scale(profile.amplitude(t));
            let q = gradient(&u).try_map_points(|y| invert_map(y, a, eps))?;
            Ok(base
                .scale(profile.derivative(t))
                .add_scaled(-1.0, &divergence(&q)))
        }),
    };

    let declared = k * profile.amplitude(0.0).abs();
    Ok(Scenario {
        id: "manufactured".into(),
        dim: d,
        declared_u: Some(declared),
        initial: Arc::new(move |grid| Ok(shape(grid).scale(profile.amplitude(0.0)))),
        forcing,
        exact: Some(Arc::new(move |t, grid| {
            Ok(shape(grid).scale(profile.amplitude(t)))
        })),
    })
}

// ---------------------------------------------------------------------------
// seeded random data

/// Largest wavenumber magnitude used by [`scenario_random_smooth`].
pub const RANDOM_MAX_WAVENUMBER: i64 = 3;

/// Coefficients `(k, c_cos, c_sin)` of a real low-mode Fourier sum.
///
/// Wavevectors with `0 < |k|² ≤ 9` are visited in a fixed order (the
/// half-space `k₀ > 0` or `k₀ = 0, k₁ > 0`, lexicographically) and each draws
/// `c_cos, c_sin` uniformly from `[−1, 1)` before division by `|k|²`.
/// `stream` selects an independent ChaCha8 stream of the seed.
pub fn low_mode_coefficients(d: usize, seed: u64, stream: u64) -> Vec<([i64; 2], f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let m = RANDOM_MAX_WAVENUMBER;
    let mut out = Vec::new();
    let k1_range = if d == 1 { 0..=0 } else { -m..=m };
    for k0 in 0..=m {
        for k1 in k1_range.clone() {
            let n2 = k0 * k0 + k1 * k1;
            if n2 == 0 || n2 > m * m || (k0 == 0 && k1 < 0) {
                continue;
            }
            let cc: f64 = rng.gen_range(-1.0..1.0);
            let cs: f64 = rng.gen_range(-1.0..1.0);
            out.push(([k0, k1], cc / n2 as f64, cs / n2 as f64));
        }
    }
    out
}

fn sample_modes(grid: &PeriodicGrid, coeffs: &[([i64; 2], f64, f64)]) -> ScalarField {
    let w = 2.0 * PI / grid.length();
    let d = grid.dim();
    ScalarField::from_fn(*grid, |x| {
        coeffs
            .iter()
            .map(|(k, cc, cs)| {
                let phase: f64 = (0..d).map(|j| w * k[j] as f64 * x[j]).sum();
                cc * phase.cos() + cs * phase.sin()
            })
            .sum()
    })
}

/// Seeded smooth data with `max|∇_h u₀| = U` on the sampling grid and a
/// time-independent forcing of sup norm `forcing_amplitude`.
pub fn scenario_random_smooth(
    params: &ModelParams,
    seed: u64,
    u_bound: f64,
    forcing_amplitude: f64,
) -> Result<Scenario> {
    if !(0.0..1.0).contains(&u_bound) {
        return Err(Error::InvalidParameter(format!(
            "U must lie in [0, 1), got {u_bound}"
        )));
    }
    if !forcing_amplitude.is_finite() {
        return Err(Error::InvalidParameter(
            "forcing amplitude must be finite".into(),
        ));
    }
    let d = params.d;
    let u_coeffs = Arc::new(low_mode_coefficients(d, seed, 0));
    let g_coeffs = Arc::new(low_mode_coefficients(d, seed, 1));

    let initial: InitialFn = Arc::new(move |grid| {
        let raw = sample_modes(grid, &u_coeffs);
        let slope = gradient(&raw).max_norm();
        if u_bound == 0.0 || slope == 0.0 {
            return Ok(ScalarField::zeros(*grid));
        }
        Ok(raw.scale(u_bound / slope))
    });
    let forcing: TimeFieldFn = Arc::new(move |_, grid| {
        if forcing_amplitude == 0.0 {
            return Ok(ScalarField::zeros(*grid));
        }
        let raw = sample_modes(grid, &g_coeffs);
        let top = raw.max_abs();
        Ok(if top > 0.0 {
            raw.scale(forcing_amplitude / top)
        } else {
            raw
        })
    });
    Ok(Scenario {
        id: format!("random_smooth/{seed}"),
        dim: d,
        declared_u: Some(u_bound),
        initial,
        forcing,
        exact: None,
    })
}

// ---------------------------------------------------------------------------
// configuration form

/// Serializable scenario selection.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScenarioSpec {
    Zero,
    Poiseuille {
        #[serde(flatten)]
        drop: PressureDrop,
    },
    Manufactured {
        #[serde(flatten)]
        profile: AmplitudeProfile,
    },
    /// Uses the model's `U` as the gradient bound.
    RandomSmooth {
        seed: u64,
        #[serde(default)]
        forcing_amplitude: f64,
    },
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec::RandomSmooth {
            seed: 0,
            forcing_amplitude: 0.0,
        }
    }
}

impl ScenarioSpec {
    pub fn build(&self, params: &ModelParams) -> Result<Scenario> {
        match *self {
            ScenarioSpec::Zero => Ok(scenario_zero(params)),
            ScenarioSpec::Poiseuille { drop } => scenario_poiseuille(params, drop),
            ScenarioSpec::Manufactured { profile } => scenario_manufactured(params, profile),
            ScenarioSpec::RandomSmooth {
                seed,
                forcing_amplitude,
            } => scenario_random_smooth(params, seed, params.u_bound, forcing_amplitude),
        }
    }

    /// Replaces the seed of a seeded scenario.
    pub fn with_seed(self, new_seed: u64) -> Self {
        match self {
            ScenarioSpec::RandomSmooth {
                forcing_amplitude, ..
            } => ScenarioSpec::RandomSmooth {
                seed: new_seed,
                forcing_amplitude,
            },
            other => other,
        }
    }
}
