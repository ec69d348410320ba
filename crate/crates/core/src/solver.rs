//! Shooting solutions of `-f'' + ℓ(ℓ+1)x⁻² f + q f = λ f` on (0,1).
//!
//! The regular solution `φ` starts from a Frobenius expansion near 0 and is
//! normalised by `x^{-ℓ-1} φ → c_ℓ`. The terminal solution `ψ` starts at
//! `x = 1` from the boundary data. Internally values are stored as
//! `w = φ · e^{-L - σ(x)}`, where `L` is a constant log-offset and
//! `σ(x) = s x` (regular) or `s (1 - x)` (terminal) removes the exponential
//! growth for complex `λ`.

use std::f64::consts::PI;
use std::fmt::{self, Write as _};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain, Error, Result};
use crate::ode::{dopri5, OdeOptions};
use crate::potential::{check_ell, parse_infinite, NumOrText, Potential};

/// Boundary parameter at `x = 1`: `f'(1) + β f(1) = 0`, or `f(1) = 0` for `β = ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beta {
    Finite(f64),
    Infinite,
}

impl Beta {
    pub fn is_infinite(self) -> bool {
        matches!(self, Beta::Infinite)
    }

    /// Prüfer angle `α ∈ (0, π]` of the boundary condition, `cot α = -β`.
    pub fn angle(self) -> f64 {
        match self {
            Beta::Infinite => PI,
            Beta::Finite(b) => PI / 2.0 + b.atan(),
        }
    }
}

impl From<f64> for Beta {
    fn from(b: f64) -> Self {
        if b.is_infinite() {
            Beta::Infinite
        } else {
            Beta::Finite(b)
        }
    }
}

impl fmt::Display for Beta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Beta::Infinite => write!(f, "inf"),
            Beta::Finite(b) => write!(f, "{b}"),
        }
    }
}

impl std::str::FromStr for Beta {
    type Err = Error;

    /// `inf` (or `infinity`, `∞`) for Dirichlet, otherwise a number.
    fn from_str(s: &str) -> Result<Self> {
        if parse_infinite(s) {
            return Ok(Beta::Infinite);
        }
        s.trim().parse::<f64>().map(Beta::from).map_err(|_| Error::Input(format!("invalid β `{s}`")))
    }
}

impl Serialize for Beta {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Beta::Infinite => s.serialize_str("inf"),
            Beta::Finite(b) => s.serialize_f64(*b),
        }
    }
}

impl<'de> Deserialize<'de> for Beta {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match NumOrText::deserialize(d)? {
            NumOrText::Num(v) if v.is_finite() => Ok(Beta::Finite(v)),
            NumOrText::Num(_) => Ok(Beta::Infinite),
            NumOrText::Text(t) if parse_infinite(&t) => Ok(Beta::Infinite),
            NumOrText::Text(t) => t.parse().map(Beta::Finite).map_err(serde::de::Error::custom),
        }
    }
}

/// Spectral parameter `λ` with the branch `z = √λ`, `Im z ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralParameter {
    pub lambda: C64,
}

impl SpectralParameter {
    pub fn new(lambda: C64) -> Self {
        Self { lambda }
    }

    /// Build from `z`; stores `λ = z²`.
    pub fn from_z(z: C64) -> Self {
        Self { lambda: z * z }
    }

    pub fn z(&self) -> C64 {
        principal_sqrt(self.lambda)
    }
}

impl From<f64> for SpectralParameter {
    fn from(l: f64) -> Self {
        Self::new(C64::new(l, 0.0))
    }
}

impl From<C64> for SpectralParameter {
    fn from(l: C64) -> Self {
        Self::new(l)
    }
}

/// `√λ` with `Im ≥ 0`.
pub fn principal_sqrt(lambda: C64) -> C64 {
    let z = lambda.sqrt();
    if z.im < 0.0 || (z.im == 0.0 && z.re < 0.0) {
        -z
    } else {
        z
    }
}

/// A complex number `mantissa · e^{exponent}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledComplex {
    pub mantissa: C64,
    pub exponent: f64,
}

impl ScaledComplex {
    pub fn new(mantissa: C64, exponent: f64) -> Self {
        Self { mantissa, exponent }.normalized()
    }

    pub fn normalized(self) -> Self {
        let m = self.mantissa.norm();
        if m == 0.0 || !m.is_finite() {
            return self;
        }
        let l = m.ln();
        Self { mantissa: self.mantissa / m, exponent: self.exponent + l }
    }

    pub fn ln_abs(&self) -> f64 {
        self.mantissa.norm().ln() + self.exponent
    }

    pub fn to_c64(&self) -> C64 {
        self.mantissa * self.exponent.exp()
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == C64::new(0.0, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rescale {
    /// Rescale when `|Im √λ| > 1`.
    Auto,
    Off,
    On,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub ode: OdeOptions,
    /// Nominal start of the regular solution.
    pub x0: f64,
    pub rescale: Rescale,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { ode: OdeOptions::default(), x0: 1e-6, rescale: Rescale::Auto }
    }
}

impl SolverOptions {
    pub(crate) fn rate(&self, lambda: C64) -> f64 {
        let s = principal_sqrt(lambda).im.abs();
        match self.rescale {
            Rescale::Off => 0.0,
            Rescale::On => s,
            Rescale::Auto if s > 1.0 => s,
            Rescale::Auto => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionKind {
    Regular,
    Terminal,
}

/// A solution sampled on a grid. Stored values are rescaled; use
/// [`SolutionSample::value`] and [`SolutionSample::derivative`] for the true ones.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionSample {
    pub kind: SolutionKind,
    pub lambda: C64,
    pub x: Vec<f64>,
    pub w: Vec<C64>,
    pub dw: Vec<C64>,
    /// Rescaling rate `s`.
    pub rate: f64,
    /// Constant log-offset `L`.
    pub log_offset: f64,
}

impl SolutionSample {
    fn sigma(&self, x: f64) -> f64 {
        match self.kind {
            SolutionKind::Regular => self.rate * x,
            SolutionKind::Terminal => self.rate * (1.0 - x),
        }
    }

    pub fn log_factor(&self, i: usize) -> f64 {
        self.log_offset + self.sigma(self.x[i])
    }

    pub fn value(&self, i: usize) -> C64 {
        self.w[i] * self.log_factor(i).exp()
    }

    pub fn derivative(&self, i: usize) -> C64 {
        self.dw[i] * self.log_factor(i).exp()
    }

    pub fn scaled_value(&self, i: usize) -> ScaledComplex {
        ScaledComplex::new(self.w[i], self.log_factor(i))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,re_value,im_value,re_deriv,im_deriv\n");
        for i in 0..self.x.len() {
            let (v, d) = (self.value(i), self.derivative(i));
            let _ = writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", self.x[i], v.re, v.im, d.re, d.im);
        }
        out
    }
}

/// `W(f, g) = f g' - f' g` at each common grid point.
pub fn wronskian(f: &SolutionSample, g: &SolutionSample) -> Result<Vec<C64>> {
    if f.x != g.x {
        return Err(Error::Input("wronskian needs samples on the same grid".into()));
    }
    Ok((0..f.x.len())
        .map(|i| {
            let l = f.log_factor(i) + g.log_factor(i);
            (f.w[i] * g.dw[i] - f.dw[i] * g.w[i]) * l.exp()
        })
        .collect())
}

/// `c_ℓ = √π / (Γ(ℓ + 3/2) 2^{ℓ+1})`.
pub fn c_ell(ell: f64) -> f64 {
    ln_c_ell(ell).exp()
}

fn ln_c_ell(ell: f64) -> f64 {
    0.5 * PI.ln() - libm::lgamma(ell + 1.5) - (ell + 1.0) * 2f64.ln()
}

/// Frobenius data of the regular solution at `x`, divided by `c_ℓ x^{ℓ+1}`:
/// returns `(S, x S' + (ℓ+1) S)/x` style pair `(φ/(c x^{ℓ+1}), φ'/(c x^{ℓ+1}))`.
fn frobenius(ell: f64, mu: C64, x: f64) -> (C64, C64) {
    let nu1 = ell + 1.5;
    let r = -mu * (x * x / 4.0);
    let mut term = C64::new(1.0, 0.0);
    let mut s = term;
    let mut ds = term * (ell + 1.0);
    for k in 1..80 {
        term *= r / (k as f64 * (nu1 + k as f64 - 1.0));
        s += term;
        ds += term * (ell + 1.0 + 2.0 * k as f64);
        if term.norm() < 1e-18 * s.norm() {
            break;
        }
    }
    (s, ds / x)
}

pub(crate) struct RegularStart {
    pub x0: f64,
    pub w: C64,
    pub dw: C64,
    pub log_offset: f64,
}

pub(crate) fn regular_start(ell: f64, q: &Potential, lambda: C64, rate: f64, opts: &SolverOptions) -> RegularStart {
    regular_start_at(ell, q, lambda, rate, start_point(q, lambda, opts))
}

pub(crate) fn start_point(q: &Potential, lambda: C64, opts: &SolverOptions) -> f64 {
    let mut x0 = opts.x0;
    for _ in 0..4 {
        let zm = (lambda - q.value(x0)).norm().sqrt();
        if zm * x0 <= 0.1 {
            break;
        }
        x0 = 0.1 / zm;
    }
    if let Some(&b) = q.breakpoints().first() {
        x0 = x0.min(0.5 * b);
    }
    x0
}

pub(crate) fn regular_start_at(ell: f64, q: &Potential, lambda: C64, rate: f64, x0: f64) -> RegularStart {
    let (s, ds) = frobenius(ell, lambda - q.value(x0), x0);
    let damp = (-rate * x0).exp();
    RegularStart { x0, w: s * damp, dw: ds * damp, log_offset: ln_c_ell(ell) + (ell + 1.0) * x0.ln() }
}

#[inline]
pub(crate) fn potential_term(ell: f64, q: &Potential, x: f64) -> f64 {
    ell * (ell + 1.0) / (x * x) + q.value(x)
}

/// Right-hand side of the rescaled system with `σ' = ds`.
#[inline]
pub(crate) fn rhs2(ell: f64, q: &Potential, lambda: C64, ds: f64, x: f64, w: C64, v: C64) -> (C64, C64) {
    (v - w * ds, w * (potential_term(ell, q, x) - lambda) - v * ds)
}

/// State of the regular solution at `x = 1`.
#[derive(Debug, Clone, Copy)]
pub struct RegularEnd {
    pub lambda: C64,
    pub w: C64,
    pub dw: C64,
    /// `φ(1) = w e^{log_scale}`.
    pub log_scale: f64,
    /// `∫₀¹ φ² = tau_scaled e^{2 log_scale}`.
    pub tau_scaled: C64,
    /// Unwrapped Prüfer angle `arg(φ' + iφ)` at 1 (real `λ` only).
    pub theta: f64,
    /// Sign changes of `Re φ` over the accepted steps in `(0,1)`.
    pub sign_changes: usize,
}

impl RegularEnd {
    pub fn phi(&self) -> C64 {
        self.w * self.log_scale.exp()
    }

    pub fn dphi(&self) -> C64 {
        self.dw * self.log_scale.exp()
    }

    pub fn tau(&self) -> C64 {
        self.tau_scaled * (2.0 * self.log_scale).exp()
    }

    pub fn characteristic_scaled(&self, beta: Beta) -> ScaledComplex {
        let m = match beta {
            Beta::Infinite => self.w,
            Beta::Finite(b) => self.dw + self.w * b,
        };
        ScaledComplex::new(m, self.log_scale)
    }
}

fn check_lambda(lambda: C64) -> Result<()> {
    if !lambda.re.is_finite() || !lambda.im.is_finite() {
        return domain(format!("non-finite λ = {lambda}"));
    }
    Ok(())
}

/// Integrate the regular solution to `x = 1`, recording `∫φ²`, the Prüfer
/// angle and the sign-change count on the way.
pub fn regular_end(ell: f64, q: &Potential, lambda: C64, opts: &SolverOptions) -> Result<RegularEnd> {
    regular_to(ell, q, lambda, 1.0, opts)
}

/// As [`regular_end`] but stopping at `x_end`; `tau` is then `∫₀^{x_end} φ²`.
pub fn regular_to(ell: f64, q: &Potential, lambda: C64, x_end: f64, opts: &SolverOptions) -> Result<RegularEnd> {
    check_ell(ell)?;
    check_lambda(lambda)?;
    if !(x_end > 0.0 && x_end <= 1.0) {
        return domain(format!("end point {x_end} outside (0,1]"));
    }
    let rate = opts.rate(lambda);
    let st = regular_start(ell, q, lambda, rate, opts);
    let j0 = C64::new(st.x0 / (2.0 * ell + 3.0) * (-2.0 * rate * x_end).exp(), 0.0);
    let rhs = |x: f64, y: &[C64; 3]| {
        let (a, b) = rhs2(ell, q, lambda, rate, x, y[0], y[1]);
        let j = if rate == 0.0 { y[0] * y[0] } else { y[0] * y[0] * (2.0 * rate * (x - x_end)).exp() };
        [a, b, j]
    };
    let mut last_arg = C64::new(st.dw.re, st.w.re).arg();
    let mut theta = last_arg;
    let mut last_sign = st.w.re.signum();
    let mut changes = 0usize;
    let observe = |x: f64, y: &[C64; 3], _forced: bool| {
        let a = C64::new(y[1].re, y[0].re).arg();
        theta += (a - last_arg + PI).rem_euclid(2.0 * PI) - PI;
        last_arg = a;
        if y[0].re != 0.0 {
            let sg = y[0].re.signum();
            if sg != last_sign && x < x_end {
                changes += 1;
            }
            last_sign = sg;
        }
    };
    let y = dopri5(rhs, st.x0, [st.w, st.dw, j0], x_end, q.breakpoints(), &opts.ode, observe)?;
    Ok(RegularEnd {
        lambda,
        w: y[0],
        dw: y[1],
        log_scale: st.log_offset + rate * x_end,
        tau_scaled: y[2],
        theta,
        sign_changes: changes,
    })
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Input("empty grid".into()));
    }
    if !grid.iter().all(|&x| x > 0.0 && x <= 1.0) || !grid.windows(2).all(|w| w[0] < w[1]) {
        return domain("grid must be strictly increasing within (0,1]");
    }
    Ok(())
}

/// Regular solution `φ_ℓ(λ, x, q)` on `grid`.
pub fn phi(ell: f64, q: &Potential, lambda: SpectralParameter, grid: &[f64], opts: &SolverOptions) -> Result<SolutionSample> {
    check_ell(ell)?;
    check_lambda(lambda.lambda)?;
    validate_grid(grid)?;
    let lam = lambda.lambda;
    let rate = opts.rate(lam);
    let st = regular_start(ell, q, lam, rate, opts);
    let mut w = Vec::with_capacity(grid.len());
    let mut dw = Vec::with_capacity(grid.len());
    // points left of the start come straight from the series
    let split = grid.partition_point(|&x| x <= st.x0);
    for &x in &grid[..split] {
        let (s, ds) = frobenius(ell, lam - q.value(x), x);
        let rel = (ell + 1.0) * (x / st.x0).ln();
        let f = (rel - rate * x).exp();
        w.push(s * f);
        dw.push(ds * f);
    }
    let mut stops: Vec<f64> = grid[split..].to_vec();
    stops.extend_from_slice(q.breakpoints());
    let rhs = |x: f64, y: &[C64; 2]| {
        let (a, b) = rhs2(ell, q, lam, rate, x, y[0], y[1]);
        [a, b]
    };
    let mut gi = split;
    let observe = |x: f64, y: &[C64; 2], forced: bool| {
        if forced && gi < grid.len() && x == grid[gi] {
            w.push(y[0]);
            dw.push(y[1]);
            gi += 1;
        }
    };
    let end = *grid.last().expect("grid not empty");
    if end > st.x0 {
        dopri5(rhs, st.x0, [st.w, st.dw], end, &stops, &opts.ode, observe)?;
    }
    if w.len() != grid.len() {
        return Err(Error::Accuracy("solver missed output grid points".into()));
    }
    Ok(SolutionSample {
        kind: SolutionKind::Regular,
        lambda: lam,
        x: grid.to_vec(),
        w,
        dw,
        rate,
        log_offset: st.log_offset,
    })
}

fn terminal_data(beta: Beta) -> (C64, C64) {
    match beta {
        Beta::Infinite => (C64::new(0.0, 0.0), C64::new(-1.0, 0.0)),
        Beta::Finite(b) => (C64::new(1.0, 0.0), C64::new(-b, 0.0)),
    }
}

/// Terminal solution `ψ_ℓ(λ, x, q)` on `grid` (integrated leftward from 1).
pub fn psi(
    ell: f64,
    q: &Potential,
    lambda: SpectralParameter,
    beta: Beta,
    grid: &[f64],
    opts: &SolverOptions,
) -> Result<SolutionSample> {
    check_ell(ell)?;
    check_lambda(lambda.lambda)?;
    validate_grid(grid)?;
    let lam = lambda.lambda;
    let rate = opts.rate(lam);
    let (p0, d0) = terminal_data(beta);
    let mut stops: Vec<f64> = grid.to_vec();
    stops.extend_from_slice(q.breakpoints());
    let rhs = |x: f64, y: &[C64; 2]| {
        let (a, b) = rhs2(ell, q, lam, -rate, x, y[0], y[1]);
        [a, b]
    };
    let mut w = vec![C64::new(0.0, 0.0); grid.len()];
    let mut dw = w.clone();
    let mut gi = grid.len();
    if grid[gi - 1] == 1.0 {
        w[gi - 1] = p0;
        dw[gi - 1] = d0;
        gi -= 1;
    }
    let mut filled = grid.len() - gi;
    let observe = |x: f64, y: &[C64; 2], forced: bool| {
        if forced && gi > 0 && x == grid[gi - 1] {
            w[gi - 1] = y[0];
            dw[gi - 1] = y[1];
            gi -= 1;
            filled += 1;
        }
    };
    dopri5(rhs, 1.0, [p0, d0], grid[0], &stops, &opts.ode, observe)?;
    if filled != grid.len() {
        return Err(Error::Accuracy("solver missed output grid points".into()));
    }
    Ok(SolutionSample { kind: SolutionKind::Terminal, lambda: lam, x: grid.to_vec(), w, dw, rate, log_offset: 0.0 })
}

/// `ψ(x_m)`, `ψ'(x_m)` and `∫_{x_m}^1 ψ²` for real `λ`.
pub(crate) fn terminal_segment(
    ell: f64,
    q: &Potential,
    lambda: f64,
    beta: Beta,
    x_m: f64,
    opts: &SolverOptions,
) -> Result<(f64, f64, f64)> {
    let lam = C64::new(lambda, 0.0);
    let (p0, d0) = terminal_data(beta);
    let rhs = |x: f64, y: &[C64; 3]| {
        let (a, b) = rhs2(ell, q, lam, 0.0, x, y[0], y[1]);
        [a, b, -(y[0] * y[0])]
    };
    let y = dopri5(rhs, 1.0, [p0, d0, C64::new(0.0, 0.0)], x_m, q.breakpoints(), &opts.ode, |_, _, _| {})?;
    Ok((y[0].re, y[1].re, y[2].re))
}

/// `Δ(λ) = φ'(1) + β φ(1)`, or `φ(1)` for `β = ∞`.
pub fn characteristic(ell: f64, q: &Potential, lambda: SpectralParameter, beta: Beta, opts: &SolverOptions) -> Result<C64> {
    Ok(characteristic_scaled(ell, q, lambda, beta, opts)?.to_c64())
}

pub fn characteristic_scaled(
    ell: f64,
    q: &Potential,
    lambda: SpectralParameter,
    beta: Beta,
    opts: &SolverOptions,
) -> Result<ScaledComplex> {
    Ok(regular_end(ell, q, lambda.lambda, opts)?.characteristic_scaled(beta))
}

/// `dΔ/dλ` at real `λ` by complex-step differentiation.
pub fn characteristic_derivative(ell: f64, q: &Potential, lambda: f64, beta: Beta, opts: &SolverOptions) -> Result<f64> {
    let h = 1e-20 * lambda.abs().max(1.0);
    let d = characteristic(ell, q, C64::new(lambda, h).into(), beta, opts)?;
    let v = d.im / h;
    if !v.is_finite() {
        return Err(Error::Accuracy("complex-step derivative underflowed".into()));
    }
    Ok(v)
}

/// `dΔ/dλ` by a Richardson-improved central difference.
pub fn characteristic_derivative_fd(ell: f64, q: &Potential, lambda: f64, beta: Beta, opts: &SolverOptions) -> Result<f64> {
    let f = |l: f64| -> Result<f64> { Ok(characteristic(ell, q, l.into(), beta, opts)?.re) };
    let h = 1e-3 * lambda.abs().max(1.0);
    let d1 = (f(lambda + h)? - f(lambda - h)?) / (2.0 * h);
    let d2 = (f(lambda + h / 2.0)? - f(lambda - h / 2.0)?) / h;
    let v = (4.0 * d2 - d1) / 3.0;
    if !v.is_finite() || h < 1e-14 {
        return Err(Error::Accuracy("finite-difference step underflow".into()));
    }
    Ok(v)
}

/// Number of eigenvalues strictly below `λ` (Prüfer angle count).
pub fn count_below(ell: f64, q: &Potential, lambda: f64, beta: Beta, opts: &SolverOptions) -> Result<usize> {
    let end = regular_end(ell, q, C64::new(lambda, 0.0), opts)?;
    Ok(count_from_angle(end.theta, beta))
}

pub(crate) fn count_from_angle(theta: f64, beta: Beta) -> usize {
    let alpha = beta.angle();
    if theta <= alpha {
        0
    } else {
        ((theta - alpha) / PI).floor() as usize + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    /// `λ^{-ℓ/2} x j_ℓ(√λ x)` via upward recurrence (fine for `zx ≳ ℓ`) or series.
    fn free_phi(ell: usize, lambda: f64, x: f64) -> f64 {
        let z = lambda.sqrt();
        let t = z * x;
        let j = if t > ell as f64 + 1.0 {
            let mut j0 = t.sin() / t;
            let mut j1 = t.sin() / (t * t) - t.cos() / t;
            if ell == 0 {
                j0
            } else {
                for m in 1..ell {
                    let j2 = (2 * m + 1) as f64 / t * j1 - j0;
                    j0 = j1;
                    j1 = j2;
                }
                j1
            }
        } else {
            let mut term = t.powi(ell as i32) / (1..=ell).map(|m| (2 * m + 1) as f64).product::<f64>();
            let mut s = term;
            for k in 1..60 {
                term *= -t * t / (2.0 * k as f64 * (2.0 * (k + ell) as f64 + 1.0));
                s += term;
            }
            s
        };
        x * j / z.powi(ell as i32)
    }

    #[test]
    fn c_ell_values() {
        assert_relative_eq!(c_ell(0.0), 1.0, epsilon = 1e-14);
        assert_relative_eq!(c_ell(1.0), 1.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(c_ell(2.0), 1.0 / 15.0, epsilon = 1e-14);
    }

    #[test]
    fn free_dirichlet_phi_vanishes_at_eigenvalue() {
        let s = phi(0.0, &Potential::zero(), (PI * PI).into(), &[0.5, 1.0], &opts()).unwrap();
        assert!(s.value(1).norm() < 1e-10);
        assert_relative_eq!(s.value(0).re, (PI / 2.0).sin() / PI, epsilon = 1e-11);
    }

    #[test]
    fn free_ell_one_and_normalisation() {
        let lam = 30.0;
        let grid = [1e-4, 1e-3, 0.2, 0.7, 1.0];
        let s = phi(1.0, &Potential::zero(), lam.into(), &grid, &opts()).unwrap();
        for (i, &x) in grid.iter().enumerate() {
            assert_relative_eq!(s.value(i).re, free_phi(1, lam, x), max_relative = 1e-9);
        }
        assert_relative_eq!(s.value(0).re / 1e-8, 1.0 / 3.0, max_relative = 1e-6);
    }

    #[test]
    fn negative_lambda_gives_sinh() {
        let s = phi(0.0, &Potential::zero(), (-1.0).into(), &[1.0], &opts()).unwrap();
        assert_relative_eq!(s.value(0).re, 1f64.sinh(), max_relative = 1e-10);
        assert!(s.value(0).im.abs() < 1e-14);
    }

    #[test]
    fn free_oracle_grid() {
        let xs: Vec<f64> = (0..=99).map(|i| 0.01 + 0.99 * i as f64 / 99.0).collect();
        for ell in 0..=2 {
            for lam in [1.0, 37.0, 900.0, 1e4] {
                let s = phi(ell as f64, &Potential::zero(), lam.into(), &xs, &opts()).unwrap();
                let scale = (0..xs.len()).map(|i| s.value(i).norm()).fold(0.0, f64::max);
                for (i, &x) in xs.iter().enumerate() {
                    let e = free_phi(ell, lam, x);
                    let err = (s.value(i).re - e).abs();
                    // relative to the local envelope so zeros of φ do not blow up the ratio
                    assert!(err <= 1e-8 * scale, "ℓ={ell} λ={lam} x={x}: {} vs {e}", s.value(i).re);
                }
            }
        }
    }

    #[test]
    fn psi_closed_form_and_initial_data() {
        let n = 3.0;
        let grid = [0.1, 0.4, 1.0];
        let s = psi(0.0, &Potential::zero(), (n * n * PI * PI).into(), Beta::Infinite, &grid, &opts()).unwrap();
        for (i, &x) in grid.iter().enumerate() {
            assert_relative_eq!(s.value(i).re, (n * PI * (1.0 - x)).sin() / (n * PI), epsilon = 1e-11);
        }
        let s = psi(0.0, &Potential::zero(), 17.0.into(), Beta::Finite(0.0), &[0.5, 1.0], &opts()).unwrap();
        assert_eq!(s.value(1), C64::new(1.0, 0.0));
        assert_eq!(s.derivative(1), C64::new(0.0, 0.0));
        let s = psi(0.0, &Potential::zero(), (PI * PI).into(), Beta::Infinite, &[1e-6], &opts()).unwrap();
        // ψ(x) = sin(π(1 - x))/π → 0 at the singular end
        assert!((s.value(0).re - (PI * (1.0 - 1e-6)).sin() / PI).abs() < 1e-12);
        assert!(s.value(0).norm() < 2e-6);
    }

    #[test]
    fn characteristic_examples() {
        let q = Potential::zero();
        let d = characteristic(0.0, &q, (PI * PI).into(), Beta::Infinite, &opts()).unwrap();
        assert!(d.norm() < 1e-12);
        let d = characteristic(0.0, &q, (PI * PI / 4.0).into(), Beta::Infinite, &opts()).unwrap();
        assert_relative_eq!(d.re, 2.0 / PI, epsilon = 1e-12);
        let z1 = 4.493_409_457_909_064_f64;
        let d = characteristic(1.0, &q, (z1 * z1).into(), Beta::Infinite, &opts()).unwrap();
        assert!(d.norm() < 1e-8);
    }

    #[test]
    fn characteristic_derivative_examples() {
        let q = Potential::zero();
        for n in 1..=3 {
            let nf = n as f64;
            let lam = nf * nf * PI * PI;
            let d = characteristic_derivative(0.0, &q, lam, Beta::Infinite, &opts()).unwrap();
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert_relative_eq!(d, sign / (2.0 * lam), max_relative = 1e-9);
        }
        let q = Potential::piecewise(vec![0.3, 0.6], vec![2.0, -1.0, 4.0]).unwrap();
        for (ell, beta) in [(0.0, Beta::Infinite), (1.0, Beta::Finite(0.5)), (-0.5, Beta::Finite(-2.0))] {
            let a = characteristic_derivative(ell, &q, 23.0, beta, &opts()).unwrap();
            let b = characteristic_derivative_fd(ell, &q, 23.0, beta, &opts()).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-6);
        }
    }

    #[test]
    fn wronskian_is_constant() {
        let q = Potential::piecewise(vec![0.25, 0.7], vec![3.0, -5.0, 1.0]).unwrap();
        let grid: Vec<f64> = (1..=50).map(|i| i as f64 / 50.0).collect();
        for lam in [C64::new(12.0, 0.0), C64::new(-40.0, 3.0), C64::new(400.0, 900.0)] {
            let f = phi(1.0, &q, lam.into(), &grid, &opts()).unwrap();
            let g = psi(1.0, &q, lam.into(), Beta::Finite(0.3), &grid, &opts()).unwrap();
            let w = wronskian(&g, &f).unwrap();
            let w1 = *w.last().unwrap();
            for v in &w {
                assert!((v - w1).norm() <= 1e-7 * w1.norm(), "{v} vs {w1}");
            }
            let delta = characteristic(1.0, &q, lam.into(), Beta::Finite(0.3), &opts()).unwrap();
            assert!((delta - w1).norm() <= 1e-7 * w1.norm());
        }
    }

    #[test]
    fn rescaling_is_transparent() {
        let q = Potential::piecewise(vec![0.5], vec![1.0, 2.0]).unwrap();
        let lam = C64::new(50.0, 120.0);
        let on = SolverOptions { rescale: Rescale::On, ..opts() };
        let off = SolverOptions { rescale: Rescale::Off, ..opts() };
        let a = characteristic(0.0, &q, lam.into(), Beta::Finite(1.0), &on).unwrap();
        let b = characteristic(0.0, &q, lam.into(), Beta::Finite(1.0), &off).unwrap();
        assert!((a - b).norm() <= 1e-7 * b.norm());
    }

    #[test]
    fn counting_free_dirichlet() {
        let q = Potential::zero();
        assert_eq!(count_below(0.0, &q, 5.0, Beta::Infinite, &opts()).unwrap(), 0);
        assert_eq!(count_below(0.0, &q, 20.0, Beta::Infinite, &opts()).unwrap(), 2 - 1);
        assert_eq!(count_below(0.0, &q, 4.5 * 4.5 * PI * PI, Beta::Infinite, &opts()).unwrap(), 4);
        // Neumann eigenvalues of the free ℓ = 0 problem: ((n - 1/2)π)²
        assert_eq!(count_below(0.0, &q, 1.0, Beta::Finite(0.0), &opts()).unwrap(), 0);
        assert_eq!(count_below(0.0, &q, 3.0, Beta::Finite(0.0), &opts()).unwrap(), 1);
        assert_eq!(count_below(0.0, &q, 1000.0, Beta::Finite(0.0), &opts()).unwrap(), 10);
    }

    #[test]
    fn ell_below_half_rejected() {
        assert!(phi(-0.6, &Potential::zero(), 1.0.into(), &[1.0], &opts()).is_err());
        assert!(phi(0.0, &Potential::zero(), 1.0.into(), &[0.0, 1.0], &opts()).is_err());
    }

    #[test]
    fn sqrt_branch() {
        for l in [C64::new(-4.0, 0.0), C64::new(-4.0, -0.0), C64::new(3.0, -2.0), C64::new(-1.0, -5.0)] {
            let z = SpectralParameter::new(l).z();
            assert!(z.im >= 0.0);
            assert!((z * z - l).norm() < 1e-14);
        }
    }
}
