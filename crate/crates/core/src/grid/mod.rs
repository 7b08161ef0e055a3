//! Periodic structured grids, grid fields and the discrete calculus on them.
//!
//! The gradient is the forward difference and the divergence the backward
//! difference on every axis. With periodic wrap-around the two are exact
//! negative adjoints under the `h^d`-weighted inner product, so discrete
//! integration by parts holds with no boundary terms.

mod spectral;

pub use spectral::{mode_eigenvalue, spectral_project};

use crate::constitutive::{Vector, MAX_DIM};
use crate::error::{Error, Result};

/// Uniform periodic grid on `(0, L)^d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeriodicGrid {
    d: usize,
    n: [usize; MAX_DIM],
    length: f64,
}

pub const MIN_POINTS: usize = 4;

impl PeriodicGrid {
    /// Grid with per-axis point counts `n` (one entry per dimension).
    pub fn new(n: &[usize], length: f64) -> Result<Self> {
        let d = n.len();
        if !(1..=MAX_DIM).contains(&d) {
            return Err(Error::InvalidParameter(format!(
                "grid dimension must be 1 or 2, got {d}"
            )));
        }
        if let Some(&bad) = n.iter().find(|&&m| m < MIN_POINTS) {
            return Err(Error::InvalidParameter(format!(
                "need at least {MIN_POINTS} points per axis, got {bad}"
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "period must be > 0, got {length}"
            )));
        }
        let mut counts = [1; MAX_DIM];
        counts[..d].copy_from_slice(n);
        Ok(Self {
            d,
            n: counts,
            length,
        })
    }

    /// Same number of points on every axis.
    pub fn uniform(d: usize, n: usize, length: f64) -> Result<Self> {
        Self::new(&vec![n; d], length)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn n(&self, axis: usize) -> usize {
        self.n[axis]
    }

    pub fn counts(&self) -> &[usize] {
        &self.n[..self.d]
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.length
    }

    #[inline]
    pub fn h(&self, axis: usize) -> f64 {
        self.length / self.n[axis] as f64
    }

    /// Volume `h^d` of one cell.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        (0..self.d).map(|j| self.h(j)).product()
    }

    /// Total number of nodes.
    #[inline]
    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Multi-index of a flat (row-major) index.
    #[inline]
    pub fn multi_index(&self, idx: usize) -> [usize; MAX_DIM] {
        [idx / self.n[1], idx % self.n[1]]
    }

    #[inline]
    pub fn flat_index(&self, ix: [usize; MAX_DIM]) -> usize {
        ix[0] * self.n[1] + ix[1]
    }

    /// Node coordinates `x_i = i h`.
    pub fn position(&self, idx: usize) -> Vector {
        let ix = self.multi_index(idx);
        let mut comps = [0.0; MAX_DIM];
        for j in 0..self.d {
            comps[j] = ix[j] as f64 * self.h(j);
        }
        Vector::from_slice(&comps[..self.d])
    }

    /// Flat index of the neighbour one step forward along `axis`.
    #[inline]
    pub fn forward(&self, idx: usize, axis: usize) -> usize {
        let mut ix = self.multi_index(idx);
        ix[axis] = if ix[axis] + 1 == self.n[axis] {
            0
        } else {
            ix[axis] + 1
        };
        self.flat_index(ix)
    }

    /// Flat index of the neighbour one step backward along `axis`.
    #[inline]
    pub fn backward(&self, idx: usize, axis: usize) -> usize {
        let mut ix = self.multi_index(idx);
        ix[axis] = if ix[axis] == 0 {
            self.n[axis] - 1
        } else {
            ix[axis] - 1
        };
        self.flat_index(ix)
    }

    fn check_same(&self, other: &PeriodicGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

/// Samples of a scalar function at the grid nodes, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: PeriodicGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: PeriodicGrid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_values(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every node position.
    pub fn from_fn(grid: PeriodicGrid, mut f: impl FnMut(&Vector) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.position(i))).collect();
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, alpha: f64, other: &ScalarField) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x + alpha * y)
                .collect(),
        }
    }

    /// In-place `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &ScalarField) {
        debug_assert_eq!(self.grid, other.grid);
        for (x, y) in self.values.iter_mut().zip(&other.values) {
            *x += alpha * y;
        }
    }

    /// Discrete `L²` inner product `Σ u v h^d`.
    pub fn inner(&self, other: &ScalarField) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x * y)
            .sum::<f64>()
            * self.grid.cell_volume()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.inner(self)
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Field shifted by one cell: `out[i] = self[i + e_axis]`.
    pub fn shifted(&self, axis: usize) -> Self {
        let values = (0..self.grid.len())
            .map(|i| self.values[self.grid.forward(i, axis)])
            .collect();
        Self {
            grid: self.grid,
            values,
        }
    }
}

/// `d` component planes over a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: PeriodicGrid,
    comps: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self {
            grid,
            comps: vec![vec![0.0; grid.len()]; grid.dim()],
        }
    }

    pub fn from_components(grid: PeriodicGrid, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.len() != grid.dim() || comps.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::GridMismatch(
                "component planes do not match grid".into(),
            ));
        }
        Ok(Self { grid, comps })
    }

    pub fn from_fn(grid: PeriodicGrid, mut f: impl FnMut(&Vector) -> Vector) -> Self {
        let mut out = Self::zeros(grid);
        for i in 0..grid.len() {
            out.set(i, &f(&grid.position(i)));
        }
        out
    }

    /// Pointwise image of `self` under `f`.
    pub fn map_points(&self, f: impl Fn(&Vector) -> Vector) -> Self {
        let mut out = Self::zeros(self.grid);
        for i in 0..self.grid.len() {
            out.set(i, &f(&self.at(i)));
        }
        out
    }

    /// Fallible pointwise image.
    pub fn try_map_points(&self, f: impl Fn(&Vector) -> Result<Vector>) -> Result<Self> {
        let mut out = Self::zeros(self.grid);
        for i in 0..self.grid.len() {
            out.set(i, &f(&self.at(i))?);
        }
        Ok(out)
    }

    #[inline]
    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    #[inline]
    pub fn component(&self, axis: usize) -> &[f64] {
        &self.comps[axis]
    }

    #[inline]
    pub fn component_mut(&mut self, axis: usize) -> &mut [f64] {
        &mut self.comps[axis]
    }

    #[inline]
    pub fn at(&self, idx: usize) -> Vector {
        match self.grid.dim() {
            1 => Vector::new1(self.comps[0][idx]),
            _ => Vector::new2(self.comps[0][idx], self.comps[1][idx]),
        }
    }

    #[inline]
    pub fn set(&mut self, idx: usize, v: &Vector) {
        for (j, plane) in self.comps.iter_mut().enumerate() {
            plane[idx] = v[j];
        }
    }

    /// Pointwise Euclidean norms.
    pub fn norms(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: (0..self.grid.len()).map(|i| self.at(i).norm()).collect(),
        }
    }

    /// `max_x |F(x)|`.
    pub fn max_norm(&self) -> f64 {
        (0..self.grid.len()).fold(0.0, |m, i| m.max(self.at(i).norm()))
    }

    /// Discrete inner product `Σ F·G h^d`.
    pub fn inner(&self, other: &VectorField) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        self.comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
            .sum::<f64>()
            * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        debug_assert_eq!(self.grid, other.grid);
        VectorField {
            grid: self.grid,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> VectorField {
        VectorField {
            grid: self.grid,
            comps: self
                .comps
                .iter()
                .map(|c| c.iter().map(|x| s * x).collect())
                .collect(),
        }
    }

    /// Component planes concatenated, the on-disk order.
    pub fn flatten(&self) -> Vec<f64> {
        self.comps.concat()
    }

    pub fn shifted(&self, axis: usize) -> Self {
        let comps = self
            .comps
            .iter()
            .map(|c| {
                (0..self.grid.len())
                    .map(|i| c[self.grid.forward(i, axis)])
                    .collect()
            })
            .collect();
        Self {
            grid: self.grid,
            comps,
        }
    }
}

/// Forward difference `(u_{i+e_j} − u_i)/h_j` on each axis.
pub fn gradient(u: &ScalarField) -> VectorField {
    let grid = *u.grid();
    let vals = u.values();
    let comps = (0..grid.dim())
        .map(|axis| {
            let inv_h = 1.0 / grid.h(axis);
            (0..grid.len())
                .map(|i| (vals[grid.forward(i, axis)] - vals[i]) * inv_h)
                .collect()
        })
        .collect();
    VectorField { grid, comps }
}

/// Backward-difference divergence, the negative adjoint of [`gradient`].
pub fn divergence(f: &VectorField) -> ScalarField {
    let grid = *f.grid();
    let mut out = vec![0.0; grid.len()];
    for axis in 0..grid.dim() {
        let inv_h = 1.0 / grid.h(axis);
        let c = f.component(axis);
        for (i, o) in out.iter_mut().enumerate() {
            *o += (c[i] - c[grid.backward(i, axis)]) * inv_h;
        }
    }
    ScalarField { grid, values: out }
}

/// Standard periodic second-order Laplacian, `divergence ∘ gradient`.
pub fn laplacian(u: &ScalarField) -> ScalarField {
    divergence(&gradient(u))
}

/// `Σ u h^d`.
pub fn integrate(u: &ScalarField) -> f64 {
    u.values().iter().sum::<f64>() * u.grid().cell_volume()
}

/// Checks that two fields live on the same grid.
pub fn same_grid(a: &PeriodicGrid, b: &PeriodicGrid) -> Result<()> {
    a.check_same(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_scalar(grid: PeriodicGrid, rng: &mut ChaCha8Rng) -> ScalarField {
        let v = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        ScalarField::from_values(grid, v).unwrap()
    }

    fn random_vector(grid: PeriodicGrid, rng: &mut ChaCha8Rng) -> VectorField {
        let comps = (0..grid.dim())
            .map(|_| (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        VectorField::from_components(grid, comps).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(PeriodicGrid::uniform(1, 3, 1.0).is_err());
        assert!(PeriodicGrid::uniform(3, 8, 1.0).is_err());
        assert!(PeriodicGrid::uniform(2, 8, 0.0).is_err());
        let g = PeriodicGrid::new(&[8, 16], 2.0).unwrap();
        assert_eq!(g.len(), 128);
        assert_eq!(g.h(1), 0.125);
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let grid = PeriodicGrid::uniform(2, 8, 1.0).unwrap();
        let g = gradient(&ScalarField::constant(grid, 3.7));
        assert_eq!(g.max_norm(), 0.0);
        let div = divergence(&VectorField::from_fn(grid, |_| Vector::new2(1.0, -2.0)));
        assert_eq!(div.max_abs(), 0.0);
    }

    #[test]
    fn gradient_of_sine_is_first_order_at_nodes() {
        let l = 2.0;
        let k = 2.0 * PI / l;
        let mut prev = None;
        for n in [32, 64, 128] {
            let grid = PeriodicGrid::uniform(1, n, l).unwrap();
            let u = ScalarField::from_fn(grid, |x| (k * x[0]).sin());
            let g = gradient(&u);
            let err = (0..n)
                .map(|i| (g.component(0)[i] - k * (k * grid.position(i)[0]).cos()).abs())
                .fold(0.0, f64::max);
            // at the midpoints the same samples are second-order accurate
            let mid = (0..n)
                .map(|i| {
                    let x = grid.position(i)[0] + 0.5 * grid.h(0);
                    (g.component(0)[i] - k * (k * x).cos()).abs()
                })
                .fold(0.0, f64::max);
            assert!(mid < k * k * k * grid.h(0).powi(2));
            if let Some(e) = prev {
                let ratio: f64 = e / err;
                assert!((1.8..2.2).contains(&ratio), "ratio {ratio}");
            }
            prev = Some(err);
        }
    }

    #[test]
    fn gradient_is_linear() {
        let grid = PeriodicGrid::uniform(2, 8, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_scalar(grid, &mut rng);
        let v = random_scalar(grid, &mut rng);
        let lhs = gradient(&u.scale(2.0).add_scaled(-3.0, &v));
        let rhs = gradient(&u).scale(2.0).sub(&gradient(&v).scale(3.0));
        assert!(lhs.sub(&rhs).max_norm() <= 1e-12);
    }

    #[test]
    fn divergence_is_negative_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for d in [1, 2] {
            for n in [8, 33] {
                let grid = PeriodicGrid::uniform(d, n, 1.3).unwrap();
                let f = random_vector(grid, &mut rng);
                let phi = random_scalar(grid, &mut rng);
                let lhs = divergence(&f).inner(&phi);
                let rhs = -f.inner(&gradient(&phi));
                assert!((lhs - rhs).abs() <= 1e-13 * f.l2_norm() * phi.l2_norm() * n as f64);
            }
        }
    }

    #[test]
    fn laplacian_is_five_point_stencil() {
        let grid = PeriodicGrid::new(&[6, 8], 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_scalar(grid, &mut rng);
        let lap = laplacian(&u);
        let v = u.values();
        for i in 0..grid.len() {
            let mut want = 0.0;
            for axis in 0..2 {
                let h2 = grid.h(axis).powi(2);
                want += (v[grid.forward(i, axis)] - 2.0 * v[i] + v[grid.backward(i, axis)]) / h2;
            }
            assert!((lap.values()[i] - want).abs() <= 1e-10 * want.abs().max(1.0));
        }
    }

    #[test]
    fn shift_commutes_with_operators() {
        let grid = PeriodicGrid::new(&[5, 7], 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = random_scalar(grid, &mut rng);
        let f = random_vector(grid, &mut rng);
        for axis in 0..2 {
            assert_eq!(gradient(&u.shifted(axis)), gradient(&u).shifted(axis));
            assert_eq!(divergence(&f.shifted(axis)), divergence(&f).shifted(axis));
        }
    }

    #[test]
    fn integrate_examples() {
        let grid = PeriodicGrid::uniform(2, 10, 3.0).unwrap();
        assert!((integrate(&ScalarField::constant(grid, 2.0)) - 18.0).abs() < 1e-12);
        let g1 = PeriodicGrid::uniform(1, 37, 2.5).unwrap();
        let s = ScalarField::from_fn(g1, |x| (2.0 * PI * x[0] / 2.5).sin());
        assert!(integrate(&s).abs() <= 1e-12 * 2.5);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (a, b) = (random_scalar(grid, &mut rng), random_scalar(grid, &mut rng));
        let sum = integrate(&a.add_scaled(1.0, &b));
        assert!((sum - integrate(&a) - integrate(&b)).abs() < 1e-12);
    }

    #[test]
    fn laplacian_converges_at_second_order() {
        let mut errs = Vec::new();
        for n in [32, 64, 128] {
            let grid = PeriodicGrid::uniform(2, n, 1.0).unwrap();
            let k = 2.0 * PI;
            let u = ScalarField::from_fn(grid, |x| (k * x[0]).sin() * (2.0 * k * x[1]).cos());
            let exact = u.scale(-5.0 * k * k);
            errs.push(laplacian(&u).add_scaled(-1.0, &exact).max_abs());
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((1.7..=2.3).contains(&order), "order {order}");
        }
    }
}
