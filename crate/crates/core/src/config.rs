//! TOML run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constitutive::ModelParams;
use crate::continuation::{default_epsilons, SweepPlan};
use crate::error::{Error, Result};
use crate::grid::PeriodicGrid;
use crate::scenario::{Scenario, ScenarioSpec};
use crate::solver::{Scheme, SolverConfig};

/// Every recognised key, one per line. Printed by the command-line help.
pub const CONFIG_KEYS: &str = "\
[scenario]
  type               zero | poiseuille | manufactured | random_smooth
  seed               seed of random_smooth, 0..2^63-1 (overridden by --seed)
  forcing_amplitude  sup norm of the random_smooth forcing (default 0)
  profile            poiseuille drop: constant | step | sine
  gamma              poiseuille drop magnitude
  t_on               switch-on time of the step drop
  omega              angular frequency of the sine drop
  kind               manufactured amplitude: linear | exponential
  a0, rate           manufactured amplitude A(t) = a0(1 + rate t) or a0 exp(rate t)
  horizon            last time the manufactured forcing is sampled
  forcing            manufactured forcing: continuous | semi_discrete
[model]
  a                  exponent of the constitutive law, a > 0
  epsilon            regularization, >= 0 (> 0 for time stepping)
  d                  spatial dimension, 1 or 2
  L                  period of the box
  U                  sup of |grad u0| for random_smooth, in [0, 1)
[solver]
  n                  grid points per axis (>= 4)
  dt, t_end          time step and final time
  scheme             implicit | explicit
  newton_tol         relative Newton residual tolerance (1e-10)
  newton_max_iter    Newton iteration budget (50)
  linear_tol         relative CG tolerance (1e-12)
  record_every       snapshot and ledger cadence in steps (1)
[sweep]
  epsilons           strictly decreasing list (default 0.1 * 2^-m down to 1e-4)
  probe              run the L^b integrability probe (false)
  b                  flux exponent when d = 1 (default 2)
  concurrent         run epsilon entries in parallel (true)
[output]
  dir                output directory (out)
  fields             write field snapshots (true)";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub linear_tol: f64,
    pub record_every: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let c = SolverConfig::default();
        Self {
            n: 64,
            dt: c.dt,
            t_end: c.t_end,
            scheme: c.scheme,
            newton_tol: c.newton_tol,
            newton_max_iter: c.newton_max_iter,
            linear_tol: c.linear_tol,
            record_every: c.record_every,
        }
    }
}

impl SolverSection {
    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            dt: self.dt,
            t_end: self.t_end,
            scheme: self.scheme,
            newton_tol: self.newton_tol,
            newton_max_iter: self.newton_max_iter,
            linear_tol: self.linear_tol,
            record_every: self.record_every,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub epsilons: Option<Vec<f64>>,
    pub probe: bool,
    pub b: Option<f64>,
    pub concurrent: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            epsilons: None,
            probe: false,
            b: None,
            concurrent: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub fields: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            fields: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioSpec,
    pub model: ModelParams,
    pub solver: SolverSection,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

/// Command-line overrides applied on top of a file.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub a: Option<f64>,
    pub epsilon: Option<f64>,
    pub d: Option<usize>,
    pub n: Option<usize>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub u_bound: Option<f64>,
    pub scheme: Option<Scheme>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.scenario = self.scenario.with_seed(seed);
        }
        let m = &mut self.model;
        m.a = o.a.unwrap_or(m.a);
        m.epsilon = o.epsilon.unwrap_or(m.epsilon);
        m.d = o.d.unwrap_or(m.d);
        m.u_bound = o.u_bound.unwrap_or(m.u_bound);
        let s = &mut self.solver;
        s.n = o.n.unwrap_or(s.n);
        s.dt = o.dt.unwrap_or(s.dt);
        s.t_end = o.t_end.unwrap_or(s.t_end);
        s.scheme = o.scheme.unwrap_or(s.scheme);
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.solver.config().validate()?;
        self.grid()?;
        self.scenario()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<PeriodicGrid> {
        PeriodicGrid::uniform(self.model.d, self.solver.n, self.model.length)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        self.scenario.build(&self.model)
    }

    pub fn sweep_plan(&self) -> Result<SweepPlan> {
        let mut plan = SweepPlan::new(
            self.scenario()?,
            self.model,
            self.grid()?,
            self.solver.config(),
        );
        plan.epsilons = self.sweep.epsilons.clone().unwrap_or_else(default_epsilons);
        plan.user_b = self.sweep.b;
        plan.concurrent = self.sweep.concurrent;
        plan.validate()?;
        Ok(plan)
    }
}
