//! Truncation to the lowest Fourier modes of the periodic Laplacian.

use std::cmp::Ordering;
use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::{PeriodicGrid, ScalarField};
use crate::error::{Error, Result};

/// Orthogonal projection onto the span of the `n_modes` real Fourier modes
/// with smallest Laplacian eigenvalue `(2π/L)² |k|²`.
///
/// Modes are counted as real functions: `{k, −k}` contributes a cosine and a
/// sine (the cosine first), self-conjugate wavevectors contribute one. Ties in
/// `|k|` are broken by lexicographic order of the signed wavevector.
pub fn spectral_project(u: &ScalarField, n_modes: usize) -> Result<ScalarField> {
    if n_modes == 0 {
        return Err(Error::InvalidParameter(
            "spectral projection needs n_modes >= 1".into(),
        ));
    }
    let grid = *u.grid();
    if n_modes >= grid.len() {
        return Ok(u.clone());
    }

    let mut coeffs: Vec<Complex64> = u.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2(&grid, &mut coeffs, false);

    let mut keep = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut budget = n_modes;
    for class in mode_classes(&grid) {
        if budget == 0 {
            break;
        }
        let c = coeffs[class.index];
        if class.conjugate == class.index {
            keep[class.index] = c;
            budget -= 1;
        } else if budget >= 2 {
            keep[class.index] = c;
            keep[class.conjugate] = coeffs[class.conjugate];
            budget -= 2;
        } else {
            // cosine half of the pair only
            keep[class.index] = Complex64::new(c.re, 0.0);
            keep[class.conjugate] = Complex64::new(c.re, 0.0);
            budget = 0;
        }
    }

    fft2(&grid, &mut keep, true);
    let scale = 1.0 / grid.len() as f64;
    ScalarField::from_values(grid, keep.iter().map(|c| c.re * scale).collect())
}

/// Laplacian eigenvalue of the mode stored at flat index `idx`.
pub fn mode_eigenvalue(grid: &PeriodicGrid, idx: usize) -> f64 {
    let k = signed_wavevector(grid, idx);
    let w = 2.0 * PI / grid.length();
    k.iter().map(|&kj| (w * kj as f64).powi(2)).sum()
}

struct ModeClass {
    index: usize,
    conjugate: usize,
    key: (i64, [i64; 2]),
}

fn signed_wavevector(grid: &PeriodicGrid, idx: usize) -> [i64; 2] {
    let ix = grid.multi_index(idx);
    let mut k = [0i64; 2];
    for axis in 0..grid.dim() {
        let n = grid.n(axis) as i64;
        let m = ix[axis] as i64;
        k[axis] = if 2 * m <= n { m } else { m - n };
    }
    k
}

fn conjugate_index(grid: &PeriodicGrid, idx: usize) -> usize {
    let ix = grid.multi_index(idx);
    let mut out = [0usize; 2];
    for axis in 0..2 {
        let n = grid.n(axis);
        out[axis] = (n - ix[axis]) % n;
    }
    grid.flat_index(out)
}

fn mode_classes(grid: &PeriodicGrid) -> Vec<ModeClass> {
    let mut classes: Vec<ModeClass> = (0..grid.len())
        .filter_map(|idx| {
            let conj = conjugate_index(grid, idx);
            let k = signed_wavevector(grid, idx);
            let kc = signed_wavevector(grid, conj);
            // canonical member of the pair is the lexicographically larger one
            if idx != conj && k < kc {
                return None;
            }
            let norm2 = k.iter().map(|x| x * x).sum::<i64>();
            Some(ModeClass {
                index: idx,
                conjugate: conj,
                key: (norm2, k),
            })
        })
        .collect();
    classes.sort_by(|a, b| match a.key.0.cmp(&b.key.0) {
        Ordering::Equal => a.key.1.cmp(&b.key.1),
        other => other,
    });
    classes
}

fn fft2(grid: &PeriodicGrid, data: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::new();
    let (n0, n1) = (grid.n(0), grid.n(1));
    let plan = |planner: &mut FftPlanner<f64>, n| {
        if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        }
    };
    if n1 > 1 {
        let rows = plan(&mut planner, n1);
        for row in data.chunks_mut(n1) {
            rows.process(row);
        }
    }
    let cols = plan(&mut planner, n0);
    let mut column = vec![Complex64::new(0.0, 0.0); n0];
    for j in 0..n1 {
        for i in 0..n0 {
            column[i] = data[i * n1 + j];
        }
        cols.process(&mut column);
        for i in 0..n0 {
            data[i * n1 + j] = column[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(grid: PeriodicGrid, seed: u64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ScalarField::from_values(
            grid,
            (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn full_projection_is_identity() {
        let grid = PeriodicGrid::new(&[8, 6], 1.0).unwrap();
        let u = random(grid, 1);
        assert_eq!(spectral_project(&u, grid.len()).unwrap(), u);
        assert!(spectral_project(&u, 0).is_err());
    }

    #[test]
    fn low_mode_is_invariant() {
        let grid = PeriodicGrid::uniform(2, 16, 2.0).unwrap();
        let u = ScalarField::from_fn(grid, |x| (PI * x[1]).sin() + 0.5);
        // constant + one cos/sin pair along each axis = 5 functions
        let p = spectral_project(&u, 5).unwrap();
        assert!(p.add_scaled(-1.0, &u).max_abs() < 1e-12);
        let p1 = spectral_project(&u, 1).unwrap();
        assert!(
            p1.add_scaled(-1.0, &ScalarField::constant(grid, 0.5))
                .max_abs()
                < 1e-12
        );
    }

    #[test]
    fn projection_is_orthogonal_and_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (d, n) in [(1, 32), (2, 12), (1, 15)] {
            let grid = PeriodicGrid::uniform(d, n, 1.0).unwrap();
            for trial in 0..20 {
                let u = random(grid, 100 + trial);
                let v = random(grid, 200 + trial);
                let modes = rng.gen_range(1..grid.len());
                let pu = spectral_project(&u, modes).unwrap();
                let pv = spectral_project(&v, modes).unwrap();
                assert!(pu.l2_norm() <= u.l2_norm() * (1.0 + 1e-12));
                let ppu = spectral_project(&pu, modes).unwrap();
                assert!(ppu.add_scaled(-1.0, &pu).max_abs() < 1e-12);
                let cross = pu.inner(&v.add_scaled(-1.0, &pv));
                assert!(cross.abs() <= 1e-12 * u.l2_norm() * v.l2_norm());
            }
        }
    }

    #[test]
    fn eigenvalues_are_ordered() {
        let grid = PeriodicGrid::uniform(2, 8, 1.0).unwrap();
        let classes = mode_classes(&grid);
        let lams: Vec<f64> = classes
            .iter()
            .map(|c| mode_eigenvalue(&grid, c.index))
            .collect();
        assert!(lams.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(lams[0], 0.0);
    }
}
