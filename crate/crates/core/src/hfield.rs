//! The two-potential function `H(λ) = φ(1,q̂) φ'(1,q) - φ(1,q) φ'(1,q̂)`.
//!
//! With this orientation `H = ∫₀¹ (q - q̂) φ(λ,·,q) φ(λ,·,q̂)`, since
//! `(φ̂ φ' - φ φ̂')' = (q - q̂) φ φ̂`. `H` is evaluated either from the determinant of end values or from the
//! integral `∫₀^a (q - q̂) φ φ̂`, both carried in scaled form so that
//! `ln|H|` stays available far into the complex plane.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::dopri5;
use crate::potential::{Potential, SmoothnessTag};
use crate::quadrature::{integrate, QuadConfig};
use crate::roots::brent;
use crate::solver::{regular_end, regular_start_at, rhs2, start_point, Beta, ScaledComplex, SolverOptions};

/// Determinant form of `H(λ)`.
pub fn h_value(ell: f64, q: &Potential, qhat: &Potential, lambda: C64, opts: &SolverOptions) -> Result<ScaledComplex> {
    let (e1, e2) = rayon::join(|| regular_end(ell, q, lambda, opts), || regular_end(ell, qhat, lambda, opts));
    let (e1, e2) = (e1?, e2?);
    Ok(ScaledComplex::new(e2.w * e1.dw - e1.w * e2.dw, e1.log_scale + e2.log_scale))
}

/// Integral form `∫₀^a (q - q̂) φ(λ,·,q) φ(λ,·,q̂)`, integrated together with
/// both solutions. Only meaningful when `q = q̂` on `(a, 1)`.
pub fn h_integral(ell: f64, q: &Potential, qhat: &Potential, lambda: C64, a: f64, opts: &SolverOptions) -> Result<ScaledComplex> {
    let rate = opts.rate(lambda);
    let x0 = start_point(q, lambda, opts).min(start_point(qhat, lambda, opts));
    let s1 = regular_start_at(ell, q, lambda, rate, x0);
    let s2 = regular_start_at(ell, qhat, lambda, rate, x0);
    let d0 = (q.value(x0) - qhat.value(x0)) * x0 / (2.0 * ell + 3.0) * (-2.0 * rate * a).exp();
    let rhs = |x: f64, y: &[C64; 5]| {
        let (a1, b1) = rhs2(ell, q, lambda, rate, x, y[0], y[1]);
        let (a2, b2) = rhs2(ell, qhat, lambda, rate, x, y[2], y[3]);
        let dq = q.value(x) - qhat.value(x);
        let j = y[0] * y[2] * dq * if rate == 0.0 { 1.0 } else { (2.0 * rate * (x - a)).exp() };
        [a1, b1, a2, b2, j]
    };
    let mut stops: Vec<f64> = q.breakpoints().to_vec();
    stops.extend_from_slice(qhat.breakpoints());
    let y = dopri5(rhs, x0, [s1.w, s1.dw, s2.w, s2.dw, C64::new(d0, 0.0)], a, &stops, &opts.ode, |_, _, _| {})?;
    Ok(ScaledComplex::new(y[4], s1.log_offset + s2.log_offset + 2.0 * rate * a))
}

/// `H(λ)` by the route that keeps its digits. The two determinant terms
/// outgrow `H` by about `e^{2|Im √λ|(1-a)}`; past `e^5` the integral is used.
pub fn h_at(ell: f64, q: &Potential, qhat: &Potential, lambda: C64, a: f64, opts: &SolverOptions) -> Result<ScaledComplex> {
    let s = crate::solver::principal_sqrt(lambda).im.abs();
    if a < 1.0 && 2.0 * s * (1.0 - a) > 5.0 {
        h_integral(ell, q, qhat, lambda, a, opts)
    } else {
        h_value(ell, q, qhat, lambda, opts)
    }
}

/// `dH/dλ` at real `λ` by complex-step differentiation.
pub fn h_derivative(ell: f64, q: &Potential, qhat: &Potential, lambda: f64, opts: &SolverOptions) -> Result<f64> {
    let h = 1e-12 * lambda.abs().max(1.0);
    let v = h_value(ell, q, qhat, C64::new(lambda, h), opts)?.to_c64();
    let d = v.im / h;
    if !d.is_finite() {
        return Err(Error::Accuracy("complex-step derivative of H is not finite".into()));
    }
    Ok(d)
}

/// Central-difference `dH/dλ` (Richardson-improved), for cross-checks.
pub fn h_derivative_fd(ell: f64, q: &Potential, qhat: &Potential, lambda: f64, opts: &SolverOptions) -> Result<f64> {
    let f = |l: f64| -> Result<f64> { Ok(h_value(ell, q, qhat, C64::new(l, 0.0), opts)?.to_c64().re) };
    let h = 1e-3 * lambda.abs().max(1.0);
    let d1 = (f(lambda + h)? - f(lambda - h)?) / (2.0 * h);
    let d2 = (f(lambda + h / 2.0)? - f(lambda - h / 2.0)?) / h;
    Ok((4.0 * d2 - d1) / 3.0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HSample {
    pub lambda: C64,
    pub h: ScaledComplex,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hdot: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HProfile {
    pub ell: f64,
    pub a: f64,
    pub q_hash: String,
    pub qhat_hash: String,
    pub samples: Vec<HSample>,
}

impl HProfile {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Samples of `H` (and `Ḣ` when asked) at the given points, in input order.
pub fn h_profile(
    ell: f64,
    q: &Potential,
    qhat: &Potential,
    a: f64,
    lambdas: &[C64],
    with_derivative: bool,
    opts: &SolverOptions,
) -> Result<HProfile> {
    let samples = lambdas
        .par_iter()
        .map(|&l| {
            let h = h_at(ell, q, qhat, l, a, opts)?;
            let hdot = if with_derivative && l.im == 0.0 { Some(h_derivative(ell, q, qhat, l.re, opts)?) } else { None };
            Ok(HSample { lambda: l, h, hdot })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HProfile { ell, a, q_hash: q.content_hash(), qhat_hash: qhat.content_hash(), samples })
}

/// Points `λ = r² e^{iθ}` on `nodes` equally spaced angles.
pub fn circle_points(r: f64, nodes: usize) -> Vec<C64> {
    (0..nodes).map(|j| C64::from_polar(r * r, 2.0 * PI * j as f64 / nodes as f64)).collect()
}

/// Real zeros of `H` on `[lo, hi]`: sign changes on an `n`-point scan, then Brent.
pub fn real_zeros(ell: f64, q: &Potential, qhat: &Potential, lo: f64, hi: f64, n: usize, opts: &SolverOptions) -> Result<Vec<f64>> {
    let xs: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let f = |l: f64| -> Result<f64> {
        let h = h_value(ell, q, qhat, C64::new(l, 0.0), opts)?;
        Ok(h.mantissa.re * h.exponent.min(600.0).exp())
    };
    let vals = xs.par_iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
    let brackets: Vec<(f64, f64, f64, f64)> = (0..n - 1)
        .filter(|&i| vals[i] == 0.0 || vals[i].signum() != vals[i + 1].signum())
        .map(|i| (xs[i], xs[i + 1], vals[i], vals[i + 1]))
        .collect();
    brackets
        .par_iter()
        .map(|&(a, b, fa, fb)| {
            if fa == 0.0 {
                return Ok(a);
            }
            brent(f, a, b, fa, fb, 1e-13 * b.abs().max(1.0), 200)
        })
        .collect()
}

/// `β* = -φ'(1)/φ(1)`, the boundary parameter for which a real `λ` is an
/// eigenvalue of `q`.
pub fn beta_star(ell: f64, q: &Potential, lambda: f64, opts: &SolverOptions) -> Result<Beta> {
    let e = regular_end(ell, q, C64::new(lambda, 0.0), opts)?;
    let (w, dw) = (e.w.re, e.dw.re);
    if w.abs() <= 1e-13 * dw.abs() {
        Ok(Beta::Infinite)
    } else {
        Ok(Beta::Finite(-dw / w))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeanLimit {
    pub value: f64,
    pub converged: bool,
    /// `|P₃ - P₂|` between the last two extrapolation depths.
    pub spread: f64,
    /// `(Z, windowed mean of λ^{ℓ+1} H over z ∈ [Z, 2Z])`.
    pub window_means: Vec<(f64, f64)>,
}

/// Large-`λ` limit of `λ^{ℓ+1} H(λ)` along the real axis.
///
/// Each grid value `λ_j` defines a window `z ∈ [√λ_j, 2√λ_j]`; the
/// Hann-weighted mean over the window suppresses the oscillating cosine
/// transform, and the window means are extrapolated in `1/Z` (Neville,
/// depth 3).
pub fn mean_perturbation_limit(
    ell: u32,
    q: &Potential,
    qhat: &Potential,
    lambda_grid: &[f64],
    tol: f64,
    opts: &SolverOptions,
) -> Result<MeanLimit> {
    if lambda_grid.len() < 4 || !lambda_grid.windows(2).all(|w| w[0] < w[1]) || lambda_grid[0] <= 0.0 {
        return Err(Error::Input("need at least 4 ascending positive grid values".into()));
    }
    let l = ell as f64;
    let mut means = Vec::with_capacity(lambda_grid.len());
    for &lam in lambda_grid {
        let zc = lam.sqrt();
        let n = ((4.0 * zc).ceil() as usize).max(128);
        let (num, den) = (0..n)
            .into_par_iter()
            .map(|i| {
                let t = (i as f64 + 0.5) / n as f64;
                let z = zc * (1.0 + t);
                let w = (PI * t).sin().powi(2);
                let lz = z * z;
                let h = h_value(l, q, qhat, C64::new(lz, 0.0), opts)?;
                let g = (h.mantissa.re) * (h.exponent + (l + 1.0) * lz.ln()).exp();
                Ok((w * g, w))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold((0.0, 0.0), |acc, (a, b)| (acc.0 + a, acc.1 + b));
        means.push((zc, num / den));
    }
    let tail = &means[means.len() - 4..];
    let hs: Vec<f64> = tail.iter().map(|(z, _)| 1.0 / z).collect();
    let ys: Vec<f64> = tail.iter().map(|(_, m)| *m).collect();
    let p3 = neville(&hs, &ys, 0.0);
    let p2 = neville(&hs[1..], &ys[1..], 0.0);
    let spread = (p3 - p2).abs();
    Ok(MeanLimit { value: p3, converged: spread <= tol, spread, window_means: means })
}

fn neville(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut p = ys.to_vec();
    let n = xs.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = ((x - xs[i + m]) * p[i] + (xs[i] - x) * p[i + 1]) / (xs[i] - xs[i + m]);
        }
    }
    p[0]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvelopeSample {
    pub z: C64,
    /// `|H(z²)| |z|^{2ℓ+2} |Im z|^{k+1/p'} e^{-2a|Im z|}`.
    pub normalized: f64,
    pub envelope: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub epsilon: f64,
    pub c: f64,
    pub gamma: f64,
    pub delta: f64,
    pub holds: bool,
    /// Largest `normalized / envelope` ratio.
    pub worst_ratio: f64,
    pub worst_z: C64,
    pub samples: Vec<EnvelopeSample>,
}

/// Slack applied to the constant fitted on the training half before the
/// envelope is checked on every sample.
pub const ENVELOPE_C_SLACK: f64 = 1.5;

/// Fit `ε + C|z|^γ e^{-δ s} + C s^{κ} e^{-2δ s}` (`s = |Im z|`, `κ = k + 1/p'`)
/// over `γ ∈ (0,1)`, `δ ∈ [δ₀/2, δ₀)` on the even-indexed samples, then check
/// every sample against the fitted envelope.
pub fn envelope_check(
    ell: f64,
    q: &Potential,
    qhat: &Potential,
    a: f64,
    tag: &SmoothnessTag,
    zs: &[C64],
    epsilon: f64,
    opts: &SolverOptions,
) -> Result<EnvelopeReport> {
    if zs.iter().any(|z| z.im == 0.0) {
        return Err(Error::Input("envelope samples need Im z ≠ 0".into()));
    }
    tag.validate(a)?;
    let kappa = tag.k as f64 + tag.p.conjugate_reciprocal();
    let normalized: Vec<f64> = zs
        .par_iter()
        .map(|&z| {
            let h = h_at(ell, q, qhat, z * z, a, opts)?;
            if h.is_zero() {
                return Ok(0.0);
            }
            let s = z.im.abs();
            let ln = h.ln_abs() + (2.0 * ell + 2.0) * z.norm().ln() + kappa * s.ln() - 2.0 * a * s;
            Ok(ln.exp())
        })
        .collect::<Result<_>>()?;
    let basis = |z: C64, g: f64, d: f64| {
        let s = z.im.abs();
        z.norm().powf(g) * (-d * s).exp() + s.powf(kappa) * (-2.0 * d * s).exp()
    };
    let mut best: Option<(f64, f64, f64, f64)> = None;
    for gi in 1..20 {
        let g = gi as f64 / 20.0;
        for di in 0..10 {
            let d = tag.delta0 * (0.5 + 0.05 * di as f64);
            let mut c: f64 = 0.0;
            for (i, (&z, &e)) in zs.iter().zip(&normalized).enumerate() {
                if i % 2 == 0 {
                    c = c.max((e - epsilon).max(0.0) / basis(z, g, d));
                }
            }
            let c = c.max(1e-300);
            let misfit: f64 = zs
                .iter()
                .zip(&normalized)
                .filter(|(_, &e)| e > 0.0)
                .map(|(&z, &e)| ((epsilon + c * basis(z, g, d)) / e).ln().powi(2))
                .sum();
            if best.is_none_or(|b| misfit < b.3) {
                best = Some((c, g, d, misfit));
            }
        }
    }
    let (c, gamma, delta, _) = best.expect("grid is non-empty");
    let c = c * ENVELOPE_C_SLACK;
    let mut worst = (0.0, zs[0]);
    let samples: Vec<EnvelopeSample> = zs
        .iter()
        .zip(&normalized)
        .map(|(&z, &e)| {
            let env = epsilon + c * basis(z, gamma, delta);
            if e / env > worst.0 {
                worst = (e / env, z);
            }
            EnvelopeSample { z, normalized: e, envelope: env }
        })
        .collect();
    Ok(EnvelopeReport {
        epsilon,
        c,
        gamma,
        delta,
        holds: worst.0 <= 1.0,
        worst_ratio: worst.0,
        worst_z: worst.1,
        samples,
    })
}

/// Decay exponent `d` in `|H(-s²)| |z|^{2ℓ+2} e^{-2as} ~ s^{-d}` fitted on
/// `z = i s`, `s ∈ [s_lo, s_hi]`.
pub fn imaginary_decay_exponent(
    ell: f64,
    q: &Potential,
    qhat: &Potential,
    a: f64,
    s_lo: f64,
    s_hi: f64,
    n: usize,
    opts: &SolverOptions,
) -> Result<crate::stats::LineFit> {
    let ss: Vec<f64> = (0..n).map(|i| s_lo * (s_hi / s_lo).powf(i as f64 / (n - 1) as f64)).collect();
    let ys = ss
        .par_iter()
        .map(|&s| {
            let h = h_at(ell, q, qhat, C64::new(-s * s, 0.0), a, opts)?;
            Ok(h.ln_abs() + (2.0 * ell + 2.0) * s.ln() - 2.0 * a * s)
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = ss.iter().map(|s| s.ln()).collect();
    let mut fit = crate::stats::fit_line(&xs, &ys).ok_or_else(|| Error::Input("degenerate decay fit".into()))?;
    fit.slope = -fit.slope;
    Ok(fit)
}

/// `F(λ) = ∫₀^a cos(2√λ x) f(x) dx`.
pub fn cosine_transform<F: Fn(f64) -> f64>(f: F, a: f64, breaks: &[f64], lambda: f64) -> Result<f64> {
    let z = crate::solver::principal_sqrt(C64::new(lambda, 0.0));
    let g = |x: f64| (z * (2.0 * x)).cos().re * f(x);
    Ok(integrate(g, 0.0, a, breaks, &QuadConfig { abs_tol: 1e-13, rel_tol: 1e-11, max_panels: 20000 })?.value)
}

/// `F'(λ) = -∫₀^a sin(2√λ x) (x/√λ) f(x) dx` (limit `-2∫x² f` at `λ = 0`).
pub fn cosine_transform_derivative<F: Fn(f64) -> f64>(f: F, a: f64, breaks: &[f64], lambda: f64) -> Result<f64> {
    let z = crate::solver::principal_sqrt(C64::new(lambda, 0.0));
    let g = |x: f64| {
        let k = if z.norm() == 0.0 { C64::new(2.0 * x * x, 0.0) } else { (z * (2.0 * x)).sin() * x / z };
        -k.re * f(x)
    };
    Ok(integrate(g, 0.0, a, breaks, &QuadConfig { abs_tol: 1e-13, rel_tol: 1e-11, max_panels: 20000 })?.value)
}

/// `F^{(k)}(0) = (-1)^k 4^k k!/(2k)! ∫₀^a x^{2k} f(x) dx`.
pub fn cosine_transform_derivative_at_zero<F: Fn(f64) -> f64>(f: F, a: f64, breaks: &[f64], k: u32) -> Result<f64> {
    let mut coef = if k % 2 == 0 { 1.0 } else { -1.0 };
    for j in 1..=k {
        // 4 j / ((2j - 1) 2j) builds 4^k k!/(2k)!
        coef *= 4.0 * j as f64 / ((2 * j - 1) as f64 * (2 * j) as f64);
    }
    let g = |x: f64| x.powi(2 * k as i32) * f(x);
    Ok(coef * integrate(g, 0.0, a, breaks, &QuadConfig::default())?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn identical_potentials_give_zero() {
        let q = Potential::piecewise(vec![0.4], vec![1.0, -2.0]).unwrap();
        for l in [C64::new(3.0, 1.0), C64::new(-20.0, 50.0), C64::new(400.0, -3.0)] {
            assert!(h_value(0.0, &q, &q, l, &opts()).unwrap().is_zero());
        }
        assert_eq!(h_derivative(1.0, &q, &q, 17.0, &opts()).unwrap(), 0.0);
    }

    #[test]
    fn free_versus_constant_shift() {
        let c = 3.0;
        let q = Potential::zero();
        let qh = Potential::constant(c);
        for lam in [5.0, 40.0, -7.0] {
            let z = crate::solver::principal_sqrt(C64::new(lam, 0.0));
            let zh = crate::solver::principal_sqrt(C64::new(lam - c, 0.0));
            let exact = (zh.sin() / zh) * z.cos() - (z.sin() / z) * zh.cos();
            let det = h_value(0.0, &q, &qh, C64::new(lam, 0.0), &opts()).unwrap().to_c64();
            let int = h_integral(0.0, &q, &qh, C64::new(lam, 0.0), 1.0, &opts()).unwrap().to_c64();
            assert!((det - exact).norm() <= 1e-9 * exact.norm().max(1e-3));
            assert!((int - det).norm() <= 1e-6 * det.norm());
        }
    }

    #[test]
    fn antisymmetry_and_routes_agree_in_complex_plane() {
        let q = Potential::piecewise(vec![0.3, 0.5], vec![2.0, -1.0, 0.5]).unwrap();
        let qh = Potential::piecewise(vec![0.2, 0.5], vec![-1.0, 3.0, 0.5]).unwrap();
        for l in [C64::new(30.0, 5.0), C64::new(-100.0, 400.0), C64::new(2500.0, 900.0)] {
            let a = h_value(1.0, &q, &qh, l, &opts()).unwrap();
            let b = h_value(1.0, &qh, &q, l, &opts()).unwrap();
            assert!((a.to_c64() + b.to_c64()).norm() <= 1e-12 * a.to_c64().norm());
            let i = h_integral(1.0, &q, &qh, l, 0.5, &opts()).unwrap();
            assert!((i.to_c64() - a.to_c64()).norm() <= 1e-6 * a.to_c64().norm());
            // real on the real axis
            let r = h_value(1.0, &q, &qh, C64::new(l.re, 0.0), &opts()).unwrap().to_c64();
            assert!(r.im.abs() <= 1e-8 * r.norm());
        }
    }

    #[test]
    fn derivative_routes_agree() {
        let q = Potential::piecewise(vec![0.5], vec![1.0, 0.0]).unwrap();
        let qh = Potential::zero();
        let a = h_derivative(0.0, &q, &qh, 20.0, &opts()).unwrap();
        let b = h_derivative_fd(0.0, &q, &qh, 20.0, &opts()).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-6);
    }

    #[test]
    fn scaled_values_survive_overflow() {
        let q = Potential::piecewise(vec![0.5], vec![1.0, 0.0]).unwrap();
        let h = h_value(0.0, &q, &Potential::zero(), C64::new(-1e6, 1.0), &opts()).unwrap();
        assert!(h.ln_abs().is_finite());
        assert!(h.ln_abs() > 700.0 * 2.0 * 0.5 * 0.5);
    }

    #[test]
    fn mean_limit_step() {
        let q = Potential::piecewise(vec![0.5], vec![1.0, 0.0]).unwrap();
        let grid: Vec<f64> = [20.0f64, 30.0, 45.0, 67.0, 100.0].iter().map(|z| z * z).collect();
        let m = mean_perturbation_limit(0, &q, &Potential::zero(), &grid, 1e-4, &opts()).unwrap();
        assert!((m.value - 0.25).abs() <= 1e-4, "{m:?}");
        let m = mean_perturbation_limit(0, &Potential::zero(), &Potential::zero(), &grid, 1e-4, &opts()).unwrap();
        assert_eq!(m.value, 0.0);
    }

    #[test]
    fn cosine_transform_examples() {
        let one = |_x: f64| 1.0;
        assert!(cosine_transform(one, 1.0, &[], PI * PI / 4.0).unwrap().abs() < 1e-12);
        assert_relative_eq!(cosine_transform_derivative_at_zero(one, 1.0, &[], 1).unwrap(), -2.0 / 3.0, epsilon = 1e-12);
        let f = |x: f64| x.exp() - 2.0 * x;
        for lam in [0.0f64, 3.0, 40.0, -5.0] {
            let h = 1e-4 * (1.0 + lam.abs());
            let fd = (cosine_transform(f, 0.7, &[], lam + h).unwrap() - cosine_transform(f, 0.7, &[], lam - h).unwrap()) / (2.0 * h);
            let d = cosine_transform_derivative(f, 0.7, &[], lam).unwrap();
            assert_relative_eq!(d, fd, max_relative = 1e-6);
        }
        // k = 0 is the plain integral, and the k = 1 formula equals F'(0)
        assert_relative_eq!(
            cosine_transform_derivative_at_zero(f, 0.7, &[], 1).unwrap(),
            cosine_transform_derivative(f, 0.7, &[], 0.0).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn beta_star_recovers_eigen_condition() {
        let q = Potential::piecewise(vec![0.5], vec![2.0, 0.0]).unwrap();
        let b = beta_star(0.0, &q, 30.0, &opts()).unwrap();
        let Beta::Finite(bv) = b else { panic!("expected finite β") };
        let d = crate::solver::characteristic(0.0, &q, 30.0.into(), Beta::Finite(bv), &opts()).unwrap();
        assert!(d.norm() < 1e-10);
    }
}
