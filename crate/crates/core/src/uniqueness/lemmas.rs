//! Numerical checks of the counting lemmas behind the corollaries.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::counting::log_integral;
use super::jensen::circle_average;
use crate::error::{Error, Result};
use crate::stats::{fit_line, LineFit};

/// Declared behaviour of a truncated series beyond the listed terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeriesTail {
    /// The omitted terms contribute at most `remainder` to the bound.
    Summable { remainder: f64 },
    Divergent,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lemma51Report {
    /// `(R, exact ∫₁^R 2m(t²)/t dt, (2/α₁)R + (1 - 2α₂/α₁) ln R)`.
    pub rows: Vec<(f64, f64, f64)>,
    pub min_difference: f64,
    pub max_difference: f64,
    /// Fit of `exact - bound` against `ln R`.
    pub trend: Option<LineFit>,
}

/// Lemma 5.1: for `√μ_k ≤ α₁k + α₂ + O(1/k)` the counting integral of
/// `m(t) = #{μ_k ≤ t}` exceeds the linear-plus-log bound by `O(1)`.
pub fn lemma_5_1(mu: &[f64], alpha1: f64, alpha2: f64, rs: &[f64]) -> Result<Lemma51Report> {
    if !(alpha1 > 0.0) {
        return Err(Error::Domain(format!("α₁ = {alpha1} must be positive")));
    }
    if mu.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Input("μ must be nondecreasing".into()));
    }
    // ∫₁^R 2·1[μ ≤ t²]/t dt = 2 max(0, ln R - max(0, ½ ln μ))
    let shifted: Vec<f64> = mu.iter().map(|&m| m.max(1.0)).collect();
    let rows = rs
        .iter()
        .map(|&r| {
            let exact = 2.0 * log_integral(&shifted, r, 1.0)?;
            let bound = 2.0 / alpha1 * r + (1.0 - 2.0 * alpha2 / alpha1) * r.ln();
            Ok((r, exact, bound))
        })
        .collect::<Result<Vec<_>>>()?;
    let diffs: Vec<f64> = rows.iter().map(|r| r.1 - r.2).collect();
    let lnr: Vec<f64> = rows.iter().map(|r| r.0.ln()).collect();
    Ok(Lemma51Report {
        min_difference: diffs.iter().copied().fold(f64::INFINITY, f64::min),
        max_difference: diffs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        trend: fit_line(&lnr, &diffs),
        rows,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lemma52Report {
    /// `Σ ½|ln|1 + t_n||` plus the declared remainder.
    pub bound: f64,
    /// `(r, ∫₀^r (n_A - n_B)(t²)/t dt)`.
    pub rows: Vec<(f64, f64)>,
    pub max_abs_difference: f64,
    pub holds: bool,
}

/// Lemma 5.2 with `a_n = b_n(1 + t_n)`.
pub fn lemma_5_2(b: &[f64], t: &[f64], tail: SeriesTail, rs: &[f64]) -> Result<Lemma52Report> {
    let remainder = match tail {
        SeriesTail::Divergent => return Err(Error::Input("Σ|t_n| declared divergent; the lemma does not apply".into())),
        SeriesTail::Summable { remainder } => remainder,
    };
    if b.len() != t.len() {
        return Err(Error::Input("b and t differ in length".into()));
    }
    if t.iter().any(|&x| x == -1.0) {
        return Err(Error::Input("1 + t_n = 0".into()));
    }
    let a: Vec<f64> = b.iter().zip(t).map(|(b, t)| b * (1.0 + t)).collect();
    let bound = t.iter().map(|x| 0.5 * (1.0 + x).abs().ln().abs()).sum::<f64>() + remainder;
    let rows = rs
        .iter()
        .map(|&r| Ok((r, log_integral(&a, r, 0.0)? - log_integral(b, r, 0.0)?)))
        .collect::<Result<Vec<_>>>()?;
    let max_abs_difference = rows.iter().map(|r| r.1.abs()).fold(0.0, f64::max);
    Ok(Lemma52Report { bound, holds: max_abs_difference <= bound * (1.0 + 1e-12) + 1e-14, rows, max_abs_difference })
}

/// `G(z) = az² + bz + c + Σ A_n (1/(z - a_n) + 1/a_n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialFraction {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// `(a_n, A_n)`.
    pub terms: Vec<(f64, f64)>,
}

impl PartialFraction {
    pub fn eval(&self, z: C64) -> C64 {
        let mut g = z * z * self.a + z * self.b + self.c;
        for &(an, cap) in &self.terms {
            g += cap * (1.0 / (z - an) + 1.0 / an);
        }
        g
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lemma53Report {
    /// `(r, ∫₀^r (n_B - n_A)(t²)/t dt)` via Jensen on `|z| = r²`.
    pub rows: Vec<(f64, f64)>,
    /// `max_r [D(r) - ½ ln r]`, the estimated constant `C`.
    pub c_estimate: f64,
    /// Fit of `D(r)` against `ln r` on the upper half of the radii.
    pub trend: Option<LineFit>,
    pub holds: bool,
}

/// Lemma 5.3: the zero-minus-pole counting integral of `G` grows at most
/// like `½ ln r`. The growth coefficient is measured and compared with ½.
pub fn lemma_5_3(g: &PartialFraction, rs: &[f64]) -> Result<Lemma53Report> {
    if g.terms.iter().any(|t| t.0 == 0.0) {
        return Err(Error::Input("pole at 0".into()));
    }
    let summable: f64 = g.terms.iter().map(|(an, cap)| cap.abs() / (an * an)).sum();
    if !summable.is_finite() {
        return Err(Error::Input("Σ|A_n|/a_n² is not finite".into()));
    }
    let origin = g.eval(C64::new(0.0, 0.0)).norm().ln();
    if !origin.is_finite() {
        return Err(Error::Domain("G(0) = 0".into()));
    }
    let ln_abs = |z: C64| -> Result<f64> { Ok(g.eval(z).norm().ln()) };
    let mut rows = Vec::with_capacity(rs.len());
    for &r in rs {
        let mut rr = r;
        let mut avg = None;
        for k in 0..6 {
            if g.terms.iter().all(|t| (t.0.abs() - rr * rr).abs() > 1e-6 * rr * rr) {
                if let Ok(v) = circle_average(ln_abs, C64::new(0.0, 0.0), rr * rr, 1e-9) {
                    avg = Some(v.value);
                    break;
                }
            }
            rr = r * (1.0 + 1e-3 * (k + 1) as f64);
        }
        let avg = avg.ok_or_else(|| Error::Accuracy(format!("no clean circle near r = {r}")))?;
        rows.push((r, 0.5 * (avg - origin)));
    }
    let c_estimate = rows.iter().map(|(r, d)| d - 0.5 * r.ln()).fold(f64::NEG_INFINITY, f64::max);
    let half = rows.len() / 2;
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows[half..].iter().map(|(r, d)| (r.ln(), *d)).unzip();
    let trend = fit_line(&xs, &ys);
    let holds = trend.map(|f| f.slope <= 0.5 + 0.05).unwrap_or(false);
    Ok(Lemma53Report { rows, c_estimate, trend, holds })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lemma54Report {
    /// `inf_{n,k} |b_n - a_k|`.
    pub separation: f64,
    /// `|a_k| · sup_n (|b_n||b_n - a_k|)^{-1}` per `k`.
    pub ratios: Vec<f64>,
    pub c_estimate: f64,
    pub holds: bool,
}

/// Lemma 5.4: `sup_n (|b_n||b_n - a_k|)^{-1} ≤ C |a_k|^{-1}` over the truncation.
pub fn lemma_5_4(a: &[f64], b: &[f64]) -> Result<Lemma54Report> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Input("empty sequence".into()));
    }
    let separation = a.iter().flat_map(|x| b.iter().map(move |y| (x - y).abs())).fold(f64::INFINITY, f64::min);
    let ratios: Vec<f64> = a
        .iter()
        .map(|&ak| {
            let sup = b.iter().map(|&bn| 1.0 / (bn.abs() * (bn - ak).abs())).fold(0.0, f64::max);
            ak.abs() * sup
        })
        .collect();
    let c_estimate = ratios.iter().copied().fold(0.0, f64::max);
    Ok(Lemma54Report { separation, holds: separation > 0.0 && c_estimate.is_finite(), ratios, c_estimate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn lemma_5_2_trivial_and_geometric() {
        let b: Vec<f64> = (1..=4000).map(|n| (n as f64 * PI).powi(2)).collect();
        let rs: Vec<f64> = (0..=400).map(|i| 10f64.powf(4.0 * i as f64 / 400.0)).collect();
        let zero = vec![0.0; b.len()];
        let rep = lemma_5_2(&b, &zero, SeriesTail::Summable { remainder: 0.0 }, &rs).unwrap();
        assert_eq!(rep.max_abs_difference, 0.0);

        let t: Vec<f64> = (1..=b.len()).map(|n| 0.5f64.powi(n as i32)).collect();
        let rep = lemma_5_2(&b, &t, SeriesTail::Summable { remainder: 0.0 }, &rs).unwrap();
        assert!(rep.holds);
        // ½ ln Π(1 + 2^{-n})
        assert!((rep.bound - 0.434_43).abs() < 1e-4, "{}", rep.bound);
        assert!(lemma_5_2(&b, &t, SeriesTail::Divergent, &rs).is_err());
    }

    #[test]
    fn lemma_5_1_squares() {
        let mu: Vec<f64> = (0..=400).map(|k| (PI * k as f64).powi(2)).collect();
        let rs: Vec<f64> = (0..=200).map(|i| 10f64.powf(1.0 + 2.0 * i as f64 / 200.0)).collect();
        let rep = lemma_5_1(&mu, PI, 0.0, &rs).unwrap();
        assert!(rep.max_difference - rep.min_difference < 1.0);
        assert!(rep.trend.unwrap().slope.abs() < 0.05);
    }

    #[test]
    fn lemma_5_3_bounded_partial_fraction() {
        let g = PartialFraction {
            a: 0.0,
            b: 0.0,
            c: 1.0,
            terms: (1..=200).map(|n| ((n as f64 * PI).powi(2), -1.0)).collect(),
        };
        let rs: Vec<f64> = (1..=12).map(|i| 2.0 + 2.5 * i as f64).collect();
        let rep = lemma_5_3(&g, &rs).unwrap();
        assert!(rep.holds, "{:?}", rep.trend);
    }

    #[test]
    fn lemma_5_4_separated_spectra() {
        let a: Vec<f64> = (1..=50).map(|n| (n as f64 * PI).powi(2)).collect();
        let b: Vec<f64> = (1..=50).map(|n| ((n as f64 - 0.5) * PI).powi(2)).collect();
        let rep = lemma_5_4(&a, &b).unwrap();
        assert!(rep.holds && rep.separation > 1.0);
        assert!(rep.ratios[40..].iter().all(|&r| r <= rep.c_estimate));
    }
}
