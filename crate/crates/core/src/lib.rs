//! Regularized evolution with a bounded constitutive law.
//!
//! Solves `∂ₜu − div q = g`, `∇u = f(q) + εq` on a periodic box, where
//! `f(q) = q / (1 + |q|^a)^{1/a}` maps onto the open unit ball, and follows
//! the solutions as `ε → 0`.

// `!(x > 0.0)` is how parameter checks reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod constitutive;
pub mod continuation;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod io;
pub mod scenario;
pub mod solver;
pub mod verify;

pub use constitutive::{ModelParams, Vector};
pub use diagnostics::DiagnosticsRecord;
pub use error::{Error, Result};
pub use grid::{PeriodicGrid, ScalarField, VectorField};
pub use scenario::{Scenario, ScenarioSpec};
pub use solver::{run, Scheme, SolverConfig, State, Trajectory};
