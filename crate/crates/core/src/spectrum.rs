//! Eigenvalues, norming constants and multipliers.
//!
//! Each eigenvalue is bracketed by counting (the Prüfer angle gives the
//! number of eigenvalues below a trial `λ`) and then polished by Brent's
//! method on `Δ`. Indices follow the oscillation count: `λ_n` has `n - 1`
//! zeros of `φ` in `(0, 1)`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::roots::brent;
use crate::solver::{
    characteristic_derivative, count_from_angle, phi, psi, regular_end, regular_to, terminal_segment, Beta,
    SolverOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub lambda: f64,
    pub index: usize,
    pub beta: Beta,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    /// `τ = ∫₀¹ φ²`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    /// `|Δ(λ_n)|`.
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Spectrum {
    pub ell: f64,
    pub beta: Beta,
    pub potential_hash: String,
    /// Asymptotic offset `ν` in `√λ_n ≈ (n + ν) π`.
    pub offset: f64,
    pub points: Vec<SpectralPoint>,
}

impl Spectrum {
    pub fn lambdas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.lambda).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,lambda,zeta,kappa,residual\n");
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        for p in &self.points {
            let _ = writeln!(out, "{},{:.16e},{},{},{:.3e}", p.index, p.lambda, opt(p.zeta), opt(p.kappa), p.residual);
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Offset `ν` of the asymptotic centre `((n + ν) π)²`.
pub fn asymptotic_offset(ell: f64, beta: Beta) -> f64 {
    match beta {
        Beta::Infinite => ell / 2.0,
        Beta::Finite(_) => (ell - 1.0) / 2.0,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SpectrumOptions {
    pub solver: SolverOptions,
    /// Also compute `ζ`, `κ` and `τ`.
    pub norming: bool,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { solver: SolverOptions::default(), norming: false }
    }
}

fn counter<'a>(ell: f64, q: &'a Potential, beta: Beta, opts: &'a SolverOptions) -> impl Fn(f64) -> Result<usize> + 'a {
    move |l| {
        let end = regular_end(ell, q, C64::new(l, 0.0), opts)?;
        Ok(count_from_angle(end.theta, beta))
    }
}

/// Lower end `-Λ₀` of the search window with no eigenvalue below it.
pub fn lower_window(ell: f64, q: &Potential, beta: Beta, opts: &SolverOptions) -> Result<f64> {
    let count = counter(ell, q, beta, opts);
    let mut lam0 = (1.0 + q.l1_norm()?).powi(2);
    // a Robin condition with β < 0 can add one eigenvalue near -β²
    if let Beta::Finite(b) = beta {
        lam0 = lam0.max(4.0 * b * b);
    }
    for _ in 0..60 {
        if count(-lam0)? == 0 {
            return Ok(-lam0);
        }
        lam0 *= 2.0;
    }
    Err(Error::Accuracy("spectrum is not bounded below on the search window".into()))
}

/// Locate `λ_n` (1-based).
pub fn eigenvalue(ell: f64, q: &Potential, beta: Beta, n: usize, opts: &SpectrumOptions) -> Result<SpectralPoint> {
    if n == 0 {
        return Err(Error::Input("eigenvalue indices start at 1".into()));
    }
    let so = &opts.solver;
    let count = counter(ell, q, beta, so);
    let nu = asymptotic_offset(ell, beta);
    let mean: f64 = crate::quadrature::integrate(|x| q.value(x), 0.0, 1.0, q.breakpoints(), &Default::default())?.value;
    let zc = ((n as f64 + nu) * PI).max(0.5 * PI);
    let centre = zc * zc + mean;
    let gap = 2.0 * zc * PI;

    let (mut lo, mut hi) = (f64::NAN, f64::NAN);
    let mut width = 0.4 * gap;
    for _ in 0..4 {
        let (a, b) = (centre - width, centre + width);
        let (ca, cb) = (count(a)?, count(b)?);
        if ca < n && cb >= n {
            lo = a;
            hi = b;
            break;
        }
        width *= 2.0;
    }
    if lo.is_nan() {
        // asymptotic guess too far off (strong or rough q): global search
        lo = lower_window(ell, q, beta, so)?;
        hi = centre.abs().max(1.0);
        let mut tries = 0;
        while count(hi)? < n {
            hi *= 2.0;
            tries += 1;
            if tries > 60 {
                return Err(Error::Completeness { expected: n, found: count(hi)? });
            }
        }
    }
    // shrink until exactly one eigenvalue (the n-th) lies in (lo, hi]
    let (mut clo, mut chi) = (count(lo)?, count(hi)?);
    for _ in 0..200 {
        if clo == n - 1 && chi == n {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let cm = count(mid)?;
        if cm >= n {
            hi = mid;
            chi = cm;
        } else {
            lo = mid;
            clo = cm;
        }
    }
    if clo != n - 1 || chi != n {
        return Err(Error::Completeness { expected: n, found: chi });
    }
    let delta = |l: f64| -> Result<f64> {
        Ok(regular_end(ell, q, C64::new(l, 0.0), so)?.characteristic_scaled(beta).to_c64().re)
    };
    let (flo, fhi) = (delta(lo)?, delta(hi)?);
    let xtol = 1e-14 * lo.abs().max(hi.abs()).max(1.0);
    let lam = brent(delta, lo, hi, flo, fhi, xtol, 300)?;

    let end = regular_end(ell, q, C64::new(lam, 0.0), so)?;
    let residual = end.characteristic_scaled(beta).to_c64().norm();
    let found = end.sign_changes + 1;
    if found != n {
        return Err(Error::Completeness { expected: n, found });
    }
    let mut point = SpectralPoint { lambda: lam, index: n, beta, zeta: None, kappa: None, tau: None, residual };
    if opts.norming {
        fill_norming(&mut point, ell, q, so)?;
    }
    Ok(point)
}

/// The `count` smallest eigenvalues, solved per index in parallel.
pub fn locate_eigenvalues(ell: f64, q: &Potential, beta: Beta, count: usize, opts: &SpectrumOptions) -> Result<Spectrum> {
    locate_range(ell, q, beta, 1, count, opts)
}

/// Eigenvalues `λ_first, …, λ_{first+count-1}`.
pub fn locate_range(
    ell: f64,
    q: &Potential,
    beta: Beta,
    first: usize,
    count: usize,
    opts: &SpectrumOptions,
) -> Result<Spectrum> {
    if count == 0 {
        return Err(Error::Input("need at least one eigenvalue".into()));
    }
    let points: Vec<SpectralPoint> = (first..first + count)
        .into_par_iter()
        .map(|n| eigenvalue(ell, q, beta, n, opts))
        .collect::<Result<_>>()?;
    for w in points.windows(2) {
        if !(w[1].lambda > w[0].lambda) {
            return Err(Error::Completeness { expected: w[1].index, found: w[0].index });
        }
    }
    Ok(Spectrum {
        ell,
        beta,
        potential_hash: q.content_hash(),
        offset: asymptotic_offset(ell, beta),
        points,
    })
}

/// Grid used to compare `ψ` with `φ`.
fn ratio_grid() -> Vec<f64> {
    (0..64).map(|i| 0.1 + 0.9 * i as f64 / 64.0).collect()
}

/// `κ` with `ψ = κ φ` at an eigenvalue, plus the abscissa where `|φ|` peaks.
fn kappa_and_peak(ell: f64, q: &Potential, point: &SpectralPoint, opts: &SolverOptions) -> Result<(f64, f64)> {
    let grid = ratio_grid();
    let f = phi(ell, q, point.lambda.into(), &grid, opts)?;
    let g = psi(ell, q, point.lambda.into(), point.beta, &grid, opts)?;
    let fv: Vec<f64> = (0..grid.len()).map(|i| f.value(i).re).collect();
    let gv: Vec<f64> = (0..grid.len()).map(|i| g.value(i).re).collect();
    let (imax, fmax) = fv
        .iter()
        .enumerate()
        .map(|(i, v)| (i, v.abs()))
        .fold((0, 0.0), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let kappa = gv[imax] / fv[imax];
    let scale = gv.iter().map(|v| v.abs()).fold(0.0, f64::max);
    for i in 0..grid.len() {
        if fv[i].abs() < 0.05 * fmax {
            continue;
        }
        let dev = (gv[i] - kappa * fv[i]).abs();
        if dev > 1e-6 * scale {
            return Err(Error::NotAnEigenvalue(format!(
                "ψ/φ varies at x = {:.3}: deviation {dev:.2e} (scale {scale:.2e}) at λ = {}",
                grid[i], point.lambda
            )));
        }
    }
    if kappa == 0.0 || !kappa.is_finite() {
        return Err(Error::NotAnEigenvalue(format!("degenerate multiplier at λ = {}", point.lambda)));
    }
    Ok((kappa, grid[imax]))
}

pub fn multiplier_kappa(point: &SpectralPoint, ell: f64, q: &Potential, opts: &SolverOptions) -> Result<f64> {
    Ok(kappa_and_peak(ell, q, point, opts)?.0)
}

/// `ζ = ∫₀¹ ψ²`: the integral is carried along with `ψ` from 1 down to the
/// peak of `|φ|`, and the rest is `κ² ∫₀^{x_m} φ²` (where `ψ` itself is
/// singular-prone).
pub fn norming_constant(point: &SpectralPoint, ell: f64, q: &Potential, opts: &SolverOptions) -> Result<f64> {
    let (kappa, xm) = kappa_and_peak(ell, q, point, opts)?;
    norming_with(point, ell, q, kappa, xm, opts)
}

fn norming_with(point: &SpectralPoint, ell: f64, q: &Potential, kappa: f64, xm: f64, opts: &SolverOptions) -> Result<f64> {
    let (_, _, right) = terminal_segment(ell, q, point.lambda, point.beta, xm, opts)?;
    let left = regular_to(ell, q, C64::new(point.lambda, 0.0), xm, opts)?.tau().re;
    let zeta = right + kappa * kappa * left;
    if !(zeta > 0.0) {
        return Err(Error::Accuracy(format!("non-positive norming constant {zeta}")));
    }
    Ok(zeta)
}

/// `τ = ∫₀¹ φ²`.
pub fn tau(point: &SpectralPoint, ell: f64, q: &Potential, opts: &SolverOptions) -> Result<f64> {
    Ok(regular_end(ell, q, C64::new(point.lambda, 0.0), opts)?.tau().re)
}

pub fn fill_norming(point: &mut SpectralPoint, ell: f64, q: &Potential, opts: &SolverOptions) -> Result<()> {
    let (kappa, xm) = kappa_and_peak(ell, q, point, opts)?;
    point.kappa = Some(kappa);
    point.zeta = Some(norming_with(point, ell, q, kappa, xm, opts)?);
    point.tau = Some(tau(point, ell, q, opts)?);
    Ok(())
}

/// `|Δ̇(λ_n) + τκ| / |Δ̇(λ_n)|`.
pub fn derivative_identity_residual(point: &SpectralPoint, ell: f64, q: &Potential, opts: &SolverOptions) -> Result<f64> {
    let d = characteristic_derivative(ell, q, point.lambda, point.beta, opts)?;
    let t = match point.tau {
        Some(t) => t,
        None => tau(point, ell, q, opts)?,
    };
    let k = match point.kappa {
        Some(k) => k,
        None => multiplier_kappa(point, ell, q, opts)?,
    };
    Ok((d + t * k).abs() / d.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn opts() -> SpectrumOptions {
        SpectrumOptions { norming: true, ..Default::default() }
    }

    #[test]
    fn free_dirichlet() {
        let s = locate_eigenvalues(0.0, &Potential::zero(), Beta::Infinite, 3, &opts()).unwrap();
        for (i, p) in s.points.iter().enumerate() {
            let n = (i + 1) as f64;
            assert_relative_eq!(p.lambda, n * n * PI * PI, max_relative = 1e-8);
            assert_eq!(p.index, i + 1);
            assert_relative_eq!(p.zeta.unwrap(), 1.0 / (2.0 * n * n * PI * PI), max_relative = 1e-8);
            let k = if i % 2 == 0 { 1.0 } else { -1.0 };
            assert_relative_eq!(p.kappa.unwrap(), k, max_relative = 1e-8);
        }
        assert_relative_eq!(s.points[0].zeta.unwrap(), 0.050_660, max_relative = 1e-4);
    }

    #[test]
    fn ell_one_first_eigenvalue() {
        let p = eigenvalue(1.0, &Potential::zero(), Beta::Infinite, 1, &opts()).unwrap();
        let z1 = 4.493_409_457_909_064_f64;
        assert_relative_eq!(p.lambda, z1 * z1, max_relative = 1e-10);
    }

    #[test]
    fn negative_eigenvalue() {
        let p = eigenvalue(0.0, &Potential::constant(-30.0), Beta::Infinite, 1, &opts()).unwrap();
        assert_relative_eq!(p.lambda, PI * PI - 30.0, max_relative = 1e-9);
    }

    #[test]
    fn identities_hold() {
        let q = Potential::piecewise(vec![0.3, 0.55], vec![4.0, -6.0, 2.5]).unwrap();
        for (ell, beta) in [(0.0, Beta::Infinite), (1.0, Beta::Finite(0.7)), (-0.5, Beta::Finite(-1.5)), (2.0, Beta::Infinite)] {
            let s = locate_eigenvalues(ell, &q, beta, 8, &opts()).unwrap();
            for p in &s.points {
                let zeta = p.zeta.unwrap();
                let k = p.kappa.unwrap();
                let t = p.tau.unwrap();
                assert_relative_eq!(zeta, k * k * t, max_relative = 1e-6);
                let r = derivative_identity_residual(p, ell, &q, &opts().solver).unwrap();
                assert!(r <= 1e-6, "ℓ={ell} β={beta} n={} r={r}", p.index);
            }
        }
    }

    #[test]
    fn shift_invariance() {
        let q = Potential::piecewise(vec![0.5], vec![1.0, -2.0]).unwrap();
        let a = locate_eigenvalues(0.5, &q, Beta::Finite(1.0), 6, &SpectrumOptions::default()).unwrap();
        let b = locate_eigenvalues(0.5, &q.shifted(3.5), Beta::Finite(1.0), 6, &SpectrumOptions::default()).unwrap();
        for (x, y) in a.points.iter().zip(&b.points) {
            assert_relative_eq!(y.lambda, x.lambda + 3.5, max_relative = 1e-8);
        }
    }

    #[test]
    fn interlacing_and_gap_limit() {
        let q = Potential::cosine(1.0, vec![0.5, 2.0, -1.0], Potential::zero()).unwrap();
        let (b1, b2) = (0.5, 2.0);
        let s1 = locate_eigenvalues(0.0, &q, Beta::Finite(b1), 40, &SpectrumOptions::default()).unwrap();
        let s2 = locate_eigenvalues(0.0, &q, Beta::Finite(b2), 40, &SpectrumOptions::default()).unwrap();
        for n in 0..40 {
            assert!(s1.points[n].lambda < s2.points[n].lambda);
            if n + 1 < 40 {
                assert!(s2.points[n].lambda < s1.points[n + 1].lambda);
            }
        }
        let gap = s2.points[39].lambda - s1.points[39].lambda;
        assert!((gap - 2.0 * (b2 - b1)).abs() <= 0.2 * 2.0 * (b2 - b1), "gap {gap}");
        let sd = locate_eigenvalues(0.0, &q, Beta::Infinite, 10, &SpectrumOptions::default()).unwrap();
        for n in 0..10 {
            assert!(s2.points[n].lambda < sd.points[n].lambda);
            assert!(sd.points[n].lambda < s1.points[n + 1].lambda);
        }
    }

    #[test]
    fn csv_and_json_exports() {
        let s = locate_eigenvalues(0.0, &Potential::zero(), Beta::Infinite, 2, &opts()).unwrap();
        let csv = s.to_csv();
        assert!(csv.starts_with("n,lambda,zeta,kappa,residual\n1,"));
        let back: Spectrum = serde_json::from_str(&s.to_json().unwrap()).unwrap();
        assert_eq!(back.points.len(), 2);
        assert_eq!(back.beta, Beta::Infinite);
    }

    #[test]
    fn zero_index_rejected() {
        assert!(eigenvalue(0.0, &Potential::zero(), Beta::Infinite, 0, &opts()).is_err());
    }
}
