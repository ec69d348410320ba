//! Counting functions and the counting-integral criterion.
//!
//! Every integral here is exact: for a step function `n(t²)` jumping at
//! `√|λ|`, `∫_{r₀}^r n(t²)/t dt = Σ max(0, ln r - max(ln r₀, ½ ln|λ|))`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::dataset::MixedDataset;
use crate::error::{domain, Result};
use crate::stats::{fit_line, LineFit};

/// Default lower bound on the fitted margin slope for a SATISFIED verdict.
pub const DEFAULT_SLOPE_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Satisfied,
    Undecided,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Satisfied => "SATISFIED",
            Verdict::Undecided => "UNDECIDED",
        })
    }
}

/// `n_A(t) = #{λ ∈ A : |λ| ≤ t}`.
pub fn count_within(values: &[f64], t: f64) -> usize {
    values.iter().filter(|v| v.abs() <= t).count()
}

/// `m(t) = 2 n_Λ(t²) + 2 n_S(t²)`.
pub fn m_value(data: &MixedDataset, t: f64) -> usize {
    let t2 = t * t;
    data.lambda.iter().map(|r| if r.value.abs() <= t2 { if r.in_s() { 4 } else { 2 } } else { 0 }).sum()
}

/// `∫_{r₀}^r n(t²)/t dt` for the values' counting function.
pub fn log_integral(values: &[f64], r: f64, r0: f64) -> Result<f64> {
    if !(r > 0.0) || r0 < 0.0 {
        return domain(format!("integration range ({r0}, {r}) invalid"));
    }
    let lr = r.ln();
    let lr0 = if r0 > 0.0 { r0.ln() } else { f64::NEG_INFINITY };
    let mut sum = 0.0;
    for &v in values {
        if v == 0.0 && r0 == 0.0 {
            return domain("λ = 0 makes the counting integral from 0 diverge; use a positive lower limit");
        }
        let start = lr0.max(0.5 * v.abs().ln());
        sum += (lr - start).max(0.0);
    }
    Ok(sum)
}

/// `∫₀^r m(t)/t dt`.
pub fn counting_integral(data: &MixedDataset, r: f64) -> Result<f64> {
    Ok(2.0 * log_integral(&data.lambdas(), r, 0.0)? + 2.0 * log_integral(&data.s_values(), r, 0.0)?)
}

/// `∫₀^R m/t - 4aR/π + (k + 2ℓ + 2 + 1/p') ln R`.
pub fn margin(data: &MixedDataset, r: f64) -> Result<f64> {
    Ok(counting_integral(data, r)? - 4.0 * data.a * r / PI + data.log_coefficient() * r.ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountingRow {
    pub r: f64,
    pub m: usize,
    pub integral: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CountingReport {
    pub ell: f64,
    pub a: f64,
    pub log_coefficient: f64,
    /// Jump points `√|λ|` of `n_Λ(t²)` and `n_S(t²)`, sorted.
    pub lambda_jumps: Vec<f64>,
    pub s_jumps: Vec<f64>,
    pub rows: Vec<CountingRow>,
    /// Margin at the jump points inside the grid range: the local maxima
    /// of the saw-tooth.
    pub envelope: Vec<(f64, f64)>,
    pub trend: Option<LineFit>,
    pub min_margin: f64,
    pub slope_tolerance: f64,
    pub verdict: Verdict,
}

impl CountingReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,m,integral,margin\n");
        for row in &self.rows {
            let _ = writeln!(out, "{:.16e},{},{:.16e},{:.16e}", row.r, row.m, row.integral, row.margin);
        }
        out
    }
}

fn jumps(values: &[f64]) -> Vec<f64> {
    let mut j: Vec<f64> = values.iter().map(|v| v.abs().sqrt()).collect();
    j.sort_by(f64::total_cmp);
    j.dedup();
    j
}

/// `n` points evenly spaced on `[1, √max|λ|]`, the range the data can speak for.
pub fn default_r_grid(data: &MixedDataset, n: usize) -> Vec<f64> {
    let top = data.lambda.iter().map(|r| r.value.abs().sqrt()).fold(1.0, f64::max);
    let n = n.max(2);
    (0..n).map(|i| 1.0 + (top - 1.0) * i as f64 / (n - 1) as f64).collect()
}

pub fn criterion_margin(data: &MixedDataset, grid: &[f64]) -> Result<CountingReport> {
    criterion_margin_with(data, grid, DEFAULT_SLOPE_TOL)
}

/// Evaluate the margin on `grid` and decide by the trend of its local
/// maxima over the upper half of the range: SATISFIED when the fitted
/// slope is at least `-slope_tol`.
pub fn criterion_margin_with(data: &MixedDataset, grid: &[f64], slope_tol: f64) -> Result<CountingReport> {
    data.validate()?;
    if data.lambda.is_empty() {
        return domain("Λ is empty");
    }
    if grid.is_empty() || grid.iter().any(|&r| !(r > 0.0)) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return domain("R-grid must be positive and strictly increasing");
    }
    let rows = grid
        .iter()
        .map(|&r| Ok(CountingRow { r, m: m_value(data, r), integral: counting_integral(data, r)?, margin: margin(data, r)? }))
        .collect::<Result<Vec<_>>>()?;
    let lambda_jumps = jumps(&data.lambdas());
    let s_jumps = jumps(&data.s_values());
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    let envelope = lambda_jumps
        .iter()
        .filter(|&&t| t >= lo && t <= hi)
        .map(|&t| Ok((t, margin(data, t)?)))
        .collect::<Result<Vec<_>>>()?;

    let mid = 0.5 * (lo + hi);
    let upper: Vec<(f64, f64)> = envelope.iter().copied().filter(|p| p.0 >= mid).collect();
    let pts = if upper.len() >= 4 { upper } else { rows.iter().filter(|r| r.r >= mid).map(|r| (r.r, r.margin)).collect() };
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let trend = fit_line(&xs, &ys);
    let min_margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    let verdict = match trend {
        Some(f) if f.slope >= -slope_tol => Verdict::Satisfied,
        _ => Verdict::Undecided,
    };
    Ok(CountingReport {
        ell: data.ell,
        a: data.a,
        log_coefficient: data.log_coefficient(),
        lambda_jumps,
        s_jumps,
        rows,
        envelope,
        trend,
        min_margin,
        slope_tolerance: slope_tol,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Beta;
    use proptest::prelude::*;

    fn free(n: usize) -> Vec<f64> {
        (1..=n).map(|k| (k as f64 * PI).powi(2)).collect()
    }

    #[test]
    fn m_at_seven() {
        let l = [PI * PI, 4.0 * PI * PI, 9.0 * PI * PI];
        let d = MixedDataset::from_values(0.0, 1.0, Beta::Infinite, &l, &l[..1]).unwrap();
        assert_eq!(m_value(&d, 7.0), 6);
    }

    #[test]
    fn integral_matches_quadrature_of_the_step_function() {
        let vals = [-3.0, 2.0, 10.0, 50.0];
        let r = 6.5;
        let exact = log_integral(&vals, r, 0.5).unwrap();
        // midpoint rule on a fine grid of ln t
        let n = 200_000;
        let (a, b) = (0.5f64.ln(), r.ln());
        let h = (b - a) / n as f64;
        let num: f64 = (0..n)
            .map(|i| {
                let t = (a + (i as f64 + 0.5) * h).exp();
                count_within(&vals, t * t) as f64 * h
            })
            .sum();
        assert!((exact - num).abs() < 1e-4);
        assert!(log_integral(&[0.0], 2.0, 0.0).is_err());
        assert_eq!(log_integral(&[0.0], 2.0, 1.0).unwrap(), 2f64.ln());
    }

    #[test]
    fn full_free_spectrum_is_bounded() {
        let l = free(60);
        let d = MixedDataset::from_values(0.0, 1.0, Beta::Infinite, &l, &l).unwrap();
        let rep = criterion_margin(&d, &default_r_grid(&d, 400)).unwrap();
        assert_eq!(rep.verdict, Verdict::Satisfied);
        // Stirling: the local maximum at R = nπ is -2 ln 2 - 1/(3n) + O(n⁻³)
        for (i, &(_, m)) in rep.envelope.iter().enumerate().skip(3) {
            let n = (i + 1) as f64;
            assert!((m + 2.0 * 2f64.ln() + 1.0 / (3.0 * n)).abs() < 1e-3, "{n}: {m}");
        }
    }

    #[test]
    fn every_second_eigenvalue_drifts_linearly() {
        let l: Vec<f64> = free(80).into_iter().step_by(2).collect();
        let d = MixedDataset::from_values(0.0, 1.0, Beta::Infinite, &l, &[]).unwrap();
        let rep = criterion_margin(&d, &default_r_grid(&d, 400)).unwrap();
        assert_eq!(rep.verdict, Verdict::Undecided);
        let slope = rep.trend.unwrap().slope;
        assert!((slope + 3.0 / PI).abs() < 0.05, "{slope}");
    }

    #[test]
    fn errors() {
        let d = MixedDataset::new(0.0, 1.0, vec![]).unwrap();
        assert!(criterion_margin(&d, &[1.0, 2.0]).is_err());
        let d = MixedDataset::from_values(0.0, 1.0, Beta::Infinite, &[1.0], &[]).unwrap();
        assert!(criterion_margin(&d, &[2.0, 1.0]).is_err());
    }

    proptest! {
        #[test]
        fn additive_and_monotone(a in proptest::collection::vec(0.5f64..500.0, 1..20),
                                 b in proptest::collection::vec(500.5f64..900.0, 1..20),
                                 r in 1.0f64..40.0) {
            let ia = log_integral(&a, r, 0.0).unwrap();
            let ib = log_integral(&b, r, 0.0).unwrap();
            let all: Vec<f64> = a.iter().chain(&b).copied().collect();
            prop_assert!((log_integral(&all, r, 0.0).unwrap() - ia - ib).abs() < 1e-9);

            let mut uniq = all.clone();
            uniq.sort_by(f64::total_cmp);
            uniq.dedup();
            let small = MixedDataset::from_values(0.0, 0.7, Beta::Infinite, &uniq[..uniq.len() / 2], &[]).unwrap();
            let big = MixedDataset::from_values(0.0, 0.7, Beta::Infinite, &uniq, &uniq[..1]).unwrap();
            prop_assert!(margin(&big, r).unwrap() >= margin(&small, r).unwrap() - 1e-12);
        }
    }
}
