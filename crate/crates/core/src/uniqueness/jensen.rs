//! Jensen-formula audits.
//!
//! For an entire `H` whose zeros include the data (simple on `Λ`, double
//! on `S`),
//! `∫₀^r m(t)/t dt ≤ (1/2π)∫ ln|H(r² e^{iθ})| dθ + |ln|H(0)||`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::counting::log_integral;
use super::dataset::MixedDataset;
use crate::error::{Error, Result};
use crate::hfield::{h_at, HProfile};
use crate::potential::Potential;
use crate::solver::SolverOptions;

const MIN_NODES: usize = 256;
const MAX_NODES: usize = 16384;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleAverage {
    pub value: f64,
    pub nodes: usize,
    /// Change between the last two node doublings.
    pub change: f64,
}

/// Trapezoid mean of `ln|f|` over `|λ - c| = radius`, doubling the node
/// count from 256 until two passes agree to `tol` (relative to `max(1, |mean|)`).
pub fn circle_average<F>(ln_abs: F, center: C64, radius: f64, tol: f64) -> Result<CircleAverage>
where
    F: Fn(C64) -> Result<f64> + Sync,
{
    let eval = |n: usize, odd_only: bool| -> Result<f64> {
        let idx: Vec<usize> = if odd_only { (1..n).step_by(2).collect() } else { (0..n).collect() };
        let vals = idx
            .par_iter()
            .map(|&j| ln_abs(center + C64::from_polar(radius, 2.0 * PI * j as f64 / n as f64)))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(v) = vals.iter().find(|v| !v.is_finite()) {
            return Err(Error::Accuracy(format!("ln|f| = {v} on the circle of radius {radius}")));
        }
        Ok(vals.iter().sum())
    };
    let mut n = MIN_NODES;
    let mut sum = eval(n, false)?;
    let mut mean = sum / n as f64;
    loop {
        let add = eval(2 * n, true)?;
        sum += add;
        n *= 2;
        let next = sum / n as f64;
        let change = (next - mean).abs();
        mean = next;
        if change <= tol * mean.abs().max(1.0) || n >= MAX_NODES {
            return Ok(CircleAverage { value: mean, nodes: n, change });
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JensenIdentity {
    pub r: f64,
    /// `∫₀^r (n_Z(t²) - n_P(t²))/t dt`.
    pub counting_difference: f64,
    /// `½[(1/2π)∫ ln|G(r² e^{iθ})| dθ - ln|G(0)|]`.
    pub circle_side: f64,
    pub discrepancy: f64,
}

/// Exact Jensen identity for a meromorphic `G` with all zeros and poles
/// known, in the `t²` counting convention.
pub fn jensen_identity<F>(ln_abs: F, zeros: &[C64], poles: &[C64], r: f64) -> Result<JensenIdentity>
where
    F: Fn(C64) -> Result<f64> + Sync,
{
    let origin = ln_abs(C64::new(0.0, 0.0))?;
    if !origin.is_finite() {
        return Err(Error::Domain("G(0) must be finite and nonzero".into()));
    }
    let zn: Vec<f64> = zeros.iter().map(|z| z.norm()).collect();
    let pn: Vec<f64> = poles.iter().map(|z| z.norm()).collect();
    let counting_difference = log_integral(&zn, r, 0.0)? - log_integral(&pn, r, 0.0)?;
    let avg = circle_average(&ln_abs, C64::new(0.0, 0.0), r * r, 1e-10)?;
    let circle_side = 0.5 * (avg.value - origin);
    Ok(JensenIdentity { r, counting_difference, circle_side, discrepancy: (counting_difference - circle_side).abs() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AuditStatus {
    Audited,
    /// `H ≡ 0`: nothing to count.
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JensenRow {
    /// Requested radius `r` (circle `|λ - c| = r²`).
    pub r: f64,
    /// Radius actually used after any perturbation away from zeros.
    pub r_used: f64,
    pub counting_integral: f64,
    pub circle_average: f64,
    /// `|ln|H(c)||`.
    pub origin_term: f64,
    pub slack: f64,
    pub holds: bool,
    pub nodes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JensenAudit {
    pub status: AuditStatus,
    /// Expansion point `c` (0 unless `H(0) = 0`).
    pub center: f64,
    pub rows: Vec<JensenRow>,
}

impl JensenAudit {
    pub fn all_hold(&self) -> bool {
        self.status == AuditStatus::Audited && self.rows.iter().all(|r| r.holds)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `∫₀^r m(t)/t dt` measured from the expansion point `c`.
fn counting_from(data: &MixedDataset, c: f64, r: f64) -> Result<f64> {
    let lam: Vec<f64> = data.lambda.iter().map(|x| x.value - c).collect();
    let s: Vec<f64> = data.s_values().iter().map(|x| x - c).collect();
    Ok(2.0 * log_integral(&lam, r, 0.0)? + 2.0 * log_integral(&s, r, 0.0)?)
}

/// Audit inequality (4.15) on each radius for an arbitrary `ln|H|`.
pub fn jensen_audit<F>(ln_abs: F, data: &MixedDataset, radii: &[f64]) -> Result<JensenAudit>
where
    F: Fn(C64) -> Result<f64> + Sync,
{
    // H(0) = 0: move the expansion point off the zero
    let mut center = None;
    for c in [0.0, 1e-3, -1e-3, 1e-2, -1e-2, 0.1, -0.1] {
        let v = ln_abs(C64::new(c, 0.0))?;
        if v.is_finite() && data.lambda.iter().all(|x| x.value != c) {
            center = Some((c, v));
            break;
        }
    }
    let Some((c, origin)) = center else {
        return Ok(JensenAudit { status: AuditStatus::Indeterminate, center: 0.0, rows: vec![] });
    };
    let cc = C64::new(c, 0.0);

    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut r_used = r;
        let mut last_err = None;
        let mut row = None;
        for attempt in 0..6 {
            let near = data.lambda.iter().any(|x| ((x.value - c).abs() - r_used * r_used).abs() <= 1e-6 * r_used * r_used);
            if !near {
                match circle_average(&ln_abs, cc, r_used * r_used, 1e-9) {
                    Ok(avg) => {
                        row = Some(avg);
                        break;
                    }
                    Err(e) => last_err = Some(e),
                }
            }
            r_used = r * (1.0 + 1e-3 * (attempt + 1) as f64);
        }
        let Some(avg) = row else {
            return Err(last_err.unwrap_or_else(|| Error::Accuracy(format!("no clean circle near r = {r}"))));
        };
        let counting = counting_from(data, c, r_used)?;
        let rhs = avg.value + origin.abs();
        let slack = rhs - counting;
        rows.push(JensenRow {
            r,
            r_used,
            counting_integral: counting,
            circle_average: avg.value,
            origin_term: origin.abs(),
            slack,
            holds: slack >= -1e-6 * rhs.abs().max(1.0),
            nodes: avg.nodes,
        });
    }
    Ok(JensenAudit { status: AuditStatus::Audited, center: c, rows })
}

/// Audit for the pair `(q, q̂)` with `H` evaluated by the solver.
pub fn jensen_audit_pair(
    ell: f64,
    q: &Potential,
    qhat: &Potential,
    data: &MixedDataset,
    radii: &[f64],
    opts: &SolverOptions,
) -> Result<JensenAudit> {
    if q.content_hash() == qhat.content_hash() {
        return Ok(JensenAudit { status: AuditStatus::Indeterminate, center: 0.0, rows: vec![] });
    }
    jensen_audit(|l| Ok(h_at(ell, q, qhat, l, data.a, opts)?.ln_abs()), data, radii)
}

/// Audit from a precomputed profile: samples are grouped by `|λ|` into
/// circles and averaged with the nodes present (no refinement). The
/// profile must contain `λ = 0`.
pub fn audit_from_profile(profile: &HProfile, data: &MixedDataset) -> Result<JensenAudit> {
    let origin = profile
        .samples
        .iter()
        .find(|s| s.lambda.norm() == 0.0)
        .map(|s| s.h.ln_abs())
        .ok_or_else(|| Error::Input("profile has no sample at λ = 0".into()))?;
    if !origin.is_finite() {
        return Err(Error::Domain("H(0) = 0 in the profile; resample around a shifted centre".into()));
    }
    let mut circles: Vec<(f64, Vec<f64>)> = Vec::new();
    for s in profile.samples.iter().filter(|s| s.lambda.norm() > 0.0) {
        let rad = s.lambda.norm();
        match circles.iter_mut().find(|(r, _)| (r - rad).abs() <= 1e-10 * rad) {
            Some((_, v)) => v.push(s.h.ln_abs()),
            None => circles.push((rad, vec![s.h.ln_abs()])),
        }
    }
    circles.sort_by(|a, b| a.0.total_cmp(&b.0));
    let rows = circles
        .into_iter()
        .map(|(rad, vals)| {
            let r = rad.sqrt();
            let avg = vals.iter().sum::<f64>() / vals.len() as f64;
            let counting = counting_from(data, 0.0, r)?;
            let rhs = avg + origin.abs();
            Ok(JensenRow {
                r,
                r_used: r,
                counting_integral: counting,
                circle_average: avg,
                origin_term: origin.abs(),
                slack: rhs - counting,
                holds: rhs - counting >= -1e-6 * rhs.abs().max(1.0),
                nodes: vals.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(JensenAudit { status: AuditStatus::Audited, center: 0.0, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Beta;

    fn rational(l: C64) -> Result<f64> {
        Ok(((l - 4.0) * (l - 9.0) / (l - 1.0)).norm().ln())
    }

    #[test]
    fn rational_identity_is_exact() {
        let zeros = [C64::new(4.0, 0.0), C64::new(9.0, 0.0)];
        let poles = [C64::new(1.0, 0.0)];
        for r in [0.5, 1.5, 2.5, 3.5, 10.0] {
            let j = jensen_identity(rational, &zeros, &poles, r).unwrap();
            assert!(j.discrepancy <= 1e-6, "r = {r}: {j:?}");
        }
    }

    #[test]
    fn polynomial_audit_holds_and_is_tight() {
        // H(λ) = (λ - 4)(λ - 9)(λ - 25) with data Λ = {4, 9}, S = {25}
        let h = |l: C64| -> Result<f64> { Ok(((l - 4.0) * (l - 9.0) * (l - 25.0)).norm().ln()) };
        let data = MixedDataset::from_values(0.0, 1.0, Beta::Infinite, &[4.0, 9.0, 25.0], &[]).unwrap();
        let audit = jensen_audit(h, &data, &[1.0, 2.5, 4.0, 6.0]).unwrap();
        assert!(audit.all_hold());
        // ln|H(0)| > 0, so the slack is 2 ln|H(0)| once every zero is inside
        let last = audit.rows.last().unwrap();
        assert!((last.slack - 2.0 * 900f64.ln()).abs() < 1e-6);
        // claiming a double zero that is not there breaks the inequality at large r
        let wrong = MixedDataset::from_values(0.0, 1.0, Beta::Infinite, &[4.0, 9.0, 25.0], &[4.0, 9.0, 25.0]).unwrap();
        let audit = jensen_audit(h, &wrong, &[40.0]).unwrap();
        assert!(!audit.all_hold());
    }

    #[test]
    fn zero_at_origin_shifts_the_centre() {
        let h = |l: C64| -> Result<f64> { Ok((l * (l - 9.0)).norm().ln()) };
        let data = MixedDataset::from_values(0.0, 1.0, Beta::Infinite, &[0.0, 9.0], &[]).unwrap();
        let audit = jensen_audit(h, &data, &[2.0, 5.0]).unwrap();
        assert_ne!(audit.center, 0.0);
        assert!(audit.all_hold());
    }

    #[test]
    fn identical_potentials_are_indeterminate() {
        let q = Potential::constant(1.0);
        let data = MixedDataset::from_values(0.0, 1.0, Beta::Infinite, &[10.0], &[]).unwrap();
        let audit = jensen_audit_pair(0.0, &q, &q, &data, &[5.0], &SolverOptions::default()).unwrap();
        assert_eq!(audit.status, AuditStatus::Indeterminate);
        let audit = jensen_audit(|_| Ok(f64::NEG_INFINITY), &data, &[5.0]).unwrap();
        assert_eq!(audit.status, AuditStatus::Indeterminate);
    }
}
