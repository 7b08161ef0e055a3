//! Linearized implicit-step operator and its conjugate-gradient solve.

use crate::constitutive::{jacobian_a, ModelParams};
use crate::error::{Error, Result};
use crate::grid::{PeriodicGrid, ScalarField, VectorField};

/// The SPD operator `J δ = δ − Δt · div((A(q) + εI)^{-1} ∇δ)` frozen at a flux `q`.
#[derive(Clone, Debug)]
pub struct Linearization {
    grid: PeriodicGrid,
    dt: f64,
    /// per-node symmetric 2×2 coefficients (m00, m01, m11)
    coeffs: Vec<[f64; 3]>,
    diagonal: Vec<f64>,
}

impl Linearization {
    pub fn at_flux(q: &VectorField, params: &ModelParams, dt: f64) -> Self {
        let grid = *q.grid();
        let coeffs: Vec<[f64; 3]> = (0..grid.len())
            .map(|i| {
                let m = jacobian_a(&q.at(i), params.a).shifted_inverse(params.epsilon);
                [m[0][0], m[0][1], m[1][1]]
            })
            .collect();
        let mut lin = Self {
            grid,
            dt,
            coeffs,
            diagonal: Vec::new(),
        };
        lin.diagonal = lin.compute_diagonal();
        lin
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    #[inline]
    fn coeff(&self, i: usize, j: usize, k: usize) -> f64 {
        let c = &self.coeffs[i];
        match (j, k) {
            (0, 0) => c[0],
            (1, 1) => c[2],
            _ => c[1],
        }
    }

    fn compute_diagonal(&self) -> Vec<f64> {
        let g = &self.grid;
        let d = g.dim();
        (0..g.len())
            .map(|i| {
                let mut s = 0.0;
                for j in 0..d {
                    let hj = g.h(j);
                    for k in 0..d {
                        s += self.coeff(i, j, k) / (hj * g.h(k));
                    }
                    s += self.coeff(g.backward(i, j), j, j) / (hj * hj);
                }
                let diag = 1.0 + self.dt * s;
                if diag > 0.0 {
                    diag
                } else {
                    1.0
                }
            })
            .collect()
    }

    /// `J δ`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let g = &self.grid;
        let d = g.dim();
        let n = g.len();
        // flux of the update: M ∇x, stored per axis
        let mut flux = [vec![0.0; n], vec![0.0; if d > 1 { n } else { 0 }]];
        for i in 0..n {
            let mut grad = [0.0; 2];
            for (k, gk) in grad.iter_mut().enumerate().take(d) {
                *gk = (x[g.forward(i, k)] - x[i]) / g.h(k);
            }
            for (j, fj) in flux.iter_mut().enumerate().take(d) {
                fj[i] = (0..d).map(|k| self.coeff(i, j, k) * grad[k]).sum();
            }
        }
        for i in 0..n {
            let mut div = 0.0;
            for (j, fj) in flux.iter().enumerate().take(d) {
                div += (fj[i] - fj[g.backward(i, j)]) / g.h(j);
            }
            out[i] = x[i] - self.dt * div;
        }
    }
}

/// Outcome of one linear solve.
#[derive(Clone, Debug)]
pub struct LinearSolve {
    pub solution: ScalarField,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solves `J δ = rhs` by Jacobi-preconditioned conjugate gradients.
pub fn newton_inner_solve(
    lin: &Linearization,
    rhs: &ScalarField,
    linear_tol: f64,
) -> Result<LinearSolve> {
    let n = lin.grid.len();
    let b = rhs.values();
    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let grid = *rhs.grid();
    if b_norm == 0.0 {
        return Ok(LinearSolve {
            solution: ScalarField::zeros(grid),
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let max_iter = 20 * n + 200;
    let target = linear_tol * b_norm;

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r
        .iter()
        .zip(&lin.diagonal)
        .map(|(ri, di)| ri / di)
        .collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut r_norm = b_norm;

    for it in 0..max_iter {
        if r_norm <= target {
            return Ok(LinearSolve {
                solution: ScalarField::from_values(grid, x)?,
                iterations: it,
                relative_residual: r_norm / b_norm,
            });
        }
        lin.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        r_norm = dot(&r, &r).sqrt();
        for i in 0..n {
            z[i] = r[i] / lin.diagonal[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if r_norm <= target {
        return Ok(LinearSolve {
            solution: ScalarField::from_values(grid, x)?,
            iterations: max_iter,
            relative_residual: r_norm / b_norm,
        });
    }
    Err(Error::NoConvergence {
        what: "conjugate gradient",
        iterations: max_iter,
        residual: r_norm / b_norm,
    })
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
