//! Pointwise constitutive maps linking the flux `q` and the gradient `∇u`.
//!
//! The basic law is `∇u = f(q) = q / (1 + |q|^a)^{1/a}`, a diffeomorphism of
//! `R^d` onto the open unit ball. Its regularization `f^ε(q) = f(q) + ε q`
//! is onto `R^d` with a `1/ε`-Lipschitz inverse. Both maps are radial, so
//! every vector operation reduces to a scalar one along `q / |q|`.
//!
//! All powers of `|q|` are evaluated through `ln(1 + s^a)` split at `s = 1`,
//! which keeps the maps finite and accurate for `|q|` far outside `[1e-8, 1e8]`.

use std::ops::{Add, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 2;

/// Model parameters shared by every module.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Exponent of the constitutive law, `a > 0`.
    pub a: f64,
    /// Regularization `ε ≥ 0`.
    pub epsilon: f64,
    /// Spatial dimension, 1 or 2.
    pub d: usize,
    /// Period of the box `(0, L)^d`.
    #[serde(rename = "L")]
    pub length: f64,
    /// Bound on `|∇u₀|` used when initial data is built from it.
    #[serde(rename = "U")]
    pub u_bound: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            a: 1.0,
            epsilon: 1e-2,
            d: 1,
            length: 1.0,
            u_bound: 0.5,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "a must be > 0, got {}",
                self.a
            )));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        if !(1..=MAX_DIM).contains(&self.d) {
            return Err(Error::InvalidParameter(format!(
                "d must be 1 or 2, got {}",
                self.d
            )));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "L must be > 0, got {}",
                self.length
            )));
        }
        if !(0.0..1.0).contains(&self.u_bound) {
            return Err(Error::InvalidParameter(format!(
                "U must lie in [0, 1), got {}",
                self.u_bound
            )));
        }
        Ok(())
    }

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        Self { epsilon, ..self }
    }
}

/// A point of `R^d`, `d ≤ 2`. Used both for fluxes and for gradients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vector {
    comps: [f64; MAX_DIM],
    dim: usize,
}

impl Vector {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "unsupported dimension {dim}");
        Self {
            comps: [0.0; MAX_DIM],
            dim,
        }
    }

    pub fn from_slice(comps: &[f64]) -> Self {
        let mut v = Self::zeros(comps.len());
        v.comps[..comps.len()].copy_from_slice(comps);
        v
    }

    pub fn new1(x: f64) -> Self {
        Self::from_slice(&[x])
    }

    pub fn new2(x: f64, y: f64) -> Self {
        Self::from_slice(&[x, y])
    }

    /// Unit vector along `axis`.
    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.comps[axis] = 1.0;
        v
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.comps[..self.dim]
    }

    #[inline]
    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        self.comps[0] * other.comps[0] + self.comps[1] * other.comps[1]
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.comps[0].hypot(self.comps[1])
    }

    #[inline]
    pub fn scale(&self, s: f64) -> Vector {
        Vector {
            comps: [self.comps[0] * s, self.comps[1] * s],
            dim: self.dim,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|c| c.is_finite())
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

impl Add for Vector {
    type Output = Vector;
    fn add(self, rhs: Vector) -> Vector {
        debug_assert_eq!(self.dim, rhs.dim);
        Vector {
            comps: [self.comps[0] + rhs.comps[0], self.comps[1] + rhs.comps[1]],
            dim: self.dim,
        }
    }
}

impl Sub for Vector {
    type Output = Vector;
    fn sub(self, rhs: Vector) -> Vector {
        debug_assert_eq!(self.dim, rhs.dim);
        Vector {
            comps: [self.comps[0] - rhs.comps[0], self.comps[1] - rhs.comps[1]],
            dim: self.dim,
        }
    }
}

impl Neg for Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        self.scale(-1.0)
    }
}

impl Mul<f64> for Vector {
    type Output = Vector;
    fn mul(self, s: f64) -> Vector {
        self.scale(s)
    }
}

// ---------------------------------------------------------------------------
// scalar kernels

/// `ln(1 + s^a)` without overflow for large `s`.
#[inline]
pub(crate) fn log1p_pow(s: f64, a: f64) -> f64 {
    if s <= 1.0 {
        s.powf(a).ln_1p()
    } else {
        a * s.ln() + s.powf(-a).ln_1p()
    }
}

/// `(1 + s^a)^{-1/a}`, so that `f(s) = s · weight(s)`.
#[inline]
pub(crate) fn radial_weight(s: f64, a: f64) -> f64 {
    if s <= 1.0 {
        (-s.powf(a).ln_1p() / a).exp()
    } else {
        f_unchecked(s, a) / s
    }
}

/// `1 / (1 + s^a)`.
#[inline]
fn inv_one_plus_pow(s: f64, a: f64) -> f64 {
    if s <= 1.0 {
        1.0 / (1.0 + s.powf(a))
    } else {
        let r = s.powf(-a);
        r / (1.0 + r)
    }
}

/// `f(s)`; for `s > 1` written as `(1 + s^{-a})^{-1/a}` so it never rounds above 1.
#[inline]
fn f_unchecked(s: f64, a: f64) -> f64 {
    if s <= 1.0 {
        s * radial_weight(s, a)
    } else {
        (-s.powf(-a).ln_1p() / a).exp()
    }
}

/// `f'(s) = (1 + s^a)^{-(1+a)/a}`.
#[inline]
fn f_prime_unchecked(s: f64, a: f64) -> f64 {
    (-log1p_pow(s, a) * (1.0 + a) / a).exp()
}

fn check_radial_args(s: f64, a: f64) -> Result<()> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!(
            "radius must be finite and >= 0, got {s}"
        )));
    }
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Domain(format!("exponent a must be > 0, got {a}")));
    }
    Ok(())
}

/// Scalar profile `f(s) = s / (1 + s^a)^{1/a}`, mapping `[0, ∞)` onto `[0, 1)`.
pub fn radial_f(s: f64, a: f64) -> Result<f64> {
    check_radial_args(s, a)?;
    Ok(f_unchecked(s, a))
}

/// `f_ε(s) = f(s) + ε s`.
pub fn radial_f_eps(s: f64, a: f64, epsilon: f64) -> Result<f64> {
    check_radial_args(s, a)?;
    if !(epsilon >= 0.0) {
        return Err(Error::Domain(format!(
            "epsilon must be >= 0, got {epsilon}"
        )));
    }
    Ok(f_unchecked(s, a) + epsilon * s)
}

/// Derivative of [`radial_f`].
pub fn radial_f_prime(s: f64, a: f64) -> Result<f64> {
    check_radial_args(s, a)?;
    Ok(f_prime_unchecked(s, a))
}

const INVERT_MAX_ITER: usize = 100;
const INVERT_TOL: f64 = 1e-12;

/// Solves `f_ε(s) = y` for `s ≥ 0`.
///
/// Safeguarded Newton: iterates stay inside a bracket `[lo, hi]` that is
/// tightened after every evaluation, and a step leaving the bracket is
/// replaced by bisection. `f_ε` is concave and increasing, so Newton started
/// left of the root climbs monotonically towards it.
pub fn invert_radial(y: f64, a: f64, epsilon: f64) -> Result<f64> {
    if !(y >= 0.0) || !y.is_finite() {
        return Err(Error::Domain(format!(
            "value must be finite and >= 0, got {y}"
        )));
    }
    check_radial_args(0.0, a)?;
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::Domain(format!(
            "epsilon must be >= 0, got {epsilon}"
        )));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    if epsilon == 0.0 && y >= 1.0 {
        return Err(Error::DomainExceeded { y });
    }

    let g = |s: f64| f_unchecked(s, a) + epsilon * s;
    let mut lo = 0.0_f64;
    let mut hi = if epsilon > 0.0 {
        y / epsilon
    } else {
        y / (1.0 - y) * 2f64.powf(1.0 / a) + 1.0
    };
    // The initial ε = 0 bracket is too tight for a < 1; widen until it holds.
    while g(hi) < y {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::NoConvergence {
                what: "radial inversion bracket",
                iterations: 0,
                residual: y - g(lo),
            });
        }
    }

    let mut s = if epsilon > 0.0 {
        // f ≤ s gives f_ε(y/(1+ε)) ≤ y, a start left of the root.
        (y / (1.0 + epsilon)).max(lo)
    } else {
        // closed form of the unregularized inverse; Newton only polishes it
        let one_minus = -(a * y.ln()).exp_m1();
        (y / one_minus.powf(1.0 / a)).clamp(lo, hi)
    };

    let tiny = 4.0 * f64::EPSILON * y;
    for _ in 0..INVERT_MAX_ITER {
        let r = g(s) - y;
        if r.abs() <= tiny {
            return Ok(s);
        }
        if r < 0.0 {
            lo = lo.max(s);
        } else {
            hi = hi.min(s);
        }
        let slope = f_prime_unchecked(s, a) + epsilon;
        let mut next = s - r / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - s).abs() <= 2.0 * f64::EPSILON * next.abs() {
            s = next;
            break;
        }
        s = next;
    }

    let residual = (g(s) - y).abs();
    if residual <= INVERT_TOL * y.max(1.0) {
        Ok(s)
    } else {
        Err(Error::NoConvergence {
            what: "radial inversion",
            iterations: INVERT_MAX_ITER,
            residual,
        })
    }
}

/// `f(q) = q / (1 + |q|^a)^{1/a}`.
#[inline]
pub fn map_f(q: &Vector, a: f64) -> Vector {
    let s = q.norm();
    q.scale(radial_weight(s, a))
}

/// `f^ε(q) = f(q) + ε q`.
#[inline]
pub fn map_f_eps(q: &Vector, a: f64, epsilon: f64) -> Vector {
    map_f(q, a) + q.scale(epsilon)
}

/// Inverse of `f^ε` (of `f` when `ε = 0`), applied radially.
pub fn invert_map(y: &Vector, a: f64, epsilon: f64) -> Result<Vector> {
    let r = y.norm();
    if r == 0.0 {
        return Ok(Vector::zeros(y.dim()));
    }
    let s = invert_radial(r, a, epsilon)?;
    Ok(y.scale(s / r))
}

/// The Jacobian `A(q) = ∇_q f(q)`, held in its eigen-decomposition.
///
/// `A(q)` has eigenvalue `(1+|q|^a)^{-1-1/a}` along `q` and
/// `(1+|q|^a)^{-1/a}` on the orthogonal complement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluxMetric {
    dim: usize,
    /// unit vector along q (e₁ when q = 0)
    dir: Vector,
    radial: f64,
    tangential: f64,
}

impl FluxMetric {
    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            dir: Vector::unit(dim, 0),
            radial: 1.0,
            tangential: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Eigenvalue along `q`.
    pub fn radial_eigenvalue(&self) -> f64 {
        self.radial
    }

    /// Eigenvalue orthogonal to `q` (absent in 1D, reported anyway).
    pub fn tangential_eigenvalue(&self) -> f64 {
        self.tangential
    }

    /// Dense entries; the unused row/column is zero when `d = 1`.
    pub fn entries(&self) -> [[f64; MAX_DIM]; MAX_DIM] {
        self.spectral_matrix(self.radial, self.tangential)
    }

    fn spectral_matrix(&self, radial: f64, tangential: f64) -> [[f64; MAX_DIM]; MAX_DIM] {
        if self.dim == 1 {
            return [[radial, 0.0], [0.0, 0.0]];
        }
        let (c, s) = (self.dir[0], self.dir[1]);
        // radial·ddᵀ + tangential·ppᵀ with p = (−s, c)
        [
            [
                radial * c * c + tangential * s * s,
                (radial - tangential) * c * s,
            ],
            [
                (radial - tangential) * c * s,
                radial * s * s + tangential * c * c,
            ],
        ]
    }

    /// Entries of `(A(q) + εI)^{-1}`, the linearized gradient-to-flux map.
    pub fn shifted_inverse(&self, epsilon: f64) -> [[f64; MAX_DIM]; MAX_DIM] {
        self.spectral_matrix(
            1.0 / (self.radial + epsilon),
            1.0 / (self.tangential + epsilon),
        )
    }

    /// `v · A w`, split into components along and across `q`.
    #[inline]
    pub fn inner(&self, v: &Vector, w: &Vector) -> f64 {
        let along = self.dir.dot(v) * self.dir.dot(w);
        if self.dim == 1 {
            return self.radial * along;
        }
        let perp = |x: &Vector| self.dir[0] * x[1] - self.dir[1] * x[0];
        self.radial * along + self.tangential * perp(v) * perp(w)
    }

    pub fn apply(&self, v: &Vector) -> Vector {
        let m = self.entries();
        let mut out = Vector::zeros(self.dim);
        for i in 0..self.dim {
            out.comps[i] = (0..self.dim).map(|j| m[i][j] * v[j]).sum();
        }
        out
    }
}

/// `A(q) = [(1+|q|^a) δ_ij − |q|^{a−2} q_i q_j] / (1+|q|^a)^{1+1/a}`.
pub fn jacobian_a(q: &Vector, a: f64) -> FluxMetric {
    let s = q.norm();
    if s < 1e-300 {
        return FluxMetric::identity(q.dim());
    }
    let tangential = radial_weight(s, a);
    FluxMetric {
        dim: q.dim(),
        dir: q.scale(1.0 / s),
        radial: tangential * inv_one_plus_pow(s, a),
        tangential,
    }
}

/// `(v, w)_{A(q)} = v · A(q) w`.
pub fn weighted_inner(v: &Vector, w: &Vector, q: &Vector, a: f64) -> f64 {
    jacobian_a(q, a).inner(v, w)
}

/// `f_{p'}(q) = (δ + |q|^a)^{(p'−2)/a} q`.
pub fn map_f_general(q: &Vector, a: f64, p_prime: f64, delta: u8) -> Result<Vector> {
    power_law(q, a, p_prime, delta, "p'")
}

/// `g_p(z) = (δ + |z|^a)^{(p−2)/a} z`; inverse of `f_{p'}` when `δ = 0`.
pub fn map_g_general(z: &Vector, a: f64, p: f64, delta: u8) -> Result<Vector> {
    power_law(z, a, p, delta, "p")
}

fn power_law(x: &Vector, a: f64, p: f64, delta: u8, name: &str) -> Result<Vector> {
    check_radial_args(0.0, a)?;
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Domain(format!("{name} must lie in [1, ∞), got {p}")));
    }
    let s = x.norm();
    let weight = match delta {
        // (1 + s^a)^{(p−2)/a} = weight^{2−p}; exact for p = 1
        1 => radial_weight(s, a).powf(2.0 - p),
        0 => {
            if s == 0.0 {
                if p < 2.0 {
                    return Err(Error::Domain(format!(
                        "singular weight at 0 for delta = 0 and {name} = {p} < 2"
                    )));
                }
                return Ok(Vector::zeros(x.dim()));
            }
            s.powf(p - 2.0)
        }
        other => return Err(Error::Domain(format!("delta must be 0 or 1, got {other}"))),
    };
    Ok(x.scale(weight))
}

// ---------------------------------------------------------------------------
// truncation

/// Cut-off `τ_k` and its companion `G_k`.
///
/// `τ_k` uses the cubic smoothstep `1 − 3x² + 2x³` on `(k, k+1)`, whose
/// slope stays in `[−3/2, 0]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationPair {
    pub k: u32,
    pub a: f64,
}

impl TruncationPair {
    pub fn new(k: u32, a: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter(
                "cut-off level k must be >= 1".into(),
            ));
        }
        check_radial_args(0.0, a)?;
        Ok(Self { k, a })
    }

    #[inline]
    pub fn tau(&self, s: f64) -> f64 {
        let x = s - f64::from(self.k);
        if x <= 0.0 {
            1.0
        } else if x >= 1.0 {
            0.0
        } else {
            1.0 - x * x * (3.0 - 2.0 * x)
        }
    }

    #[inline]
    pub fn tau_prime(&self, s: f64) -> f64 {
        let x = s - f64::from(self.k);
        if x <= 0.0 || x >= 1.0 {
            0.0
        } else {
            6.0 * x * (x - 1.0)
        }
    }

    /// `G_k(t) = ∫₀ᵗ τ_k'(s) (1 + s^a)^{1/a} ds`.
    pub fn g(&self, t: f64) -> f64 {
        let k = f64::from(self.k);
        if t <= k {
            return 0.0;
        }
        let a = self.a;
        let integrand = |s: f64| self.tau_prime(s) * (log1p_pow(s, a) / a).exp();
        adaptive_simpson(integrand, k, t.min(k + 1.0), 1e-10)
    }

    /// `2^{(a+1)/a} (1 + k)`.
    pub fn g_bound(&self) -> f64 {
        2f64.powf((self.a + 1.0) / self.a) * (1.0 + f64::from(self.k))
    }
}

pub fn tau_k(s: f64, trunc: &TruncationPair) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::Domain(format!("tau_k needs s >= 0, got {s}")));
    }
    Ok(trunc.tau(s))
}

pub fn g_k(t: f64, trunc: &TruncationPair) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("G_k needs t >= 0, got {t}")));
    }
    Ok(trunc.g(t))
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub(crate) fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        (a, fa): (f64, f64),
        (m, fm): (f64, f64),
        (b, fb): (f64, f64),
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, (a, fa), (lm, flm), (m, fm), left, 0.5 * tol, depth - 1)
            + recurse(f, (m, fm), (rm, frm), (b, fb), right, 0.5 * tol, depth - 1)
    }
    if hi <= lo {
        return 0.0;
    }
    let m = 0.5 * (lo + hi);
    let (fa, fm, fb) = (f(lo), f(m), f(hi));
    let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(&f, (lo, fa), (m, fm), (hi, fb), whole, tol, 50)
}
