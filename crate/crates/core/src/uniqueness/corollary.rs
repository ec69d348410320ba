//! Checkers for the corollaries of the counting criterion.
//!
//! Each checker evaluates the stated inequality or count on the supplied
//! (finite) data and returns the worst margin. "For all sufficiently
//! large t" is read as "over the whole data range".

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::counting::{count_within, Verdict};
use crate::error::{domain, Error, Result};
use crate::potential::is_half_negative;
use crate::solver::Beta;
use crate::stats::{fit_line, LineFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CorollaryId {
    #[serde(rename = "5.3")]
    C5_3,
    #[serde(rename = "5.2")]
    C5_2,
    #[serde(rename = "5.6")]
    C5_6,
    #[serde(rename = "5.7")]
    C5_7,
    #[serde(rename = "5.9")]
    C5_9,
    #[serde(rename = "5.8")]
    C5_8,
}

impl fmt::Display for CorollaryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorollaryId::C5_3 => "5.3",
            CorollaryId::C5_2 => "5.2",
            CorollaryId::C5_6 => "5.6",
            CorollaryId::C5_7 => "5.7",
            CorollaryId::C5_9 => "5.9",
            CorollaryId::C5_8 => "5.8",
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorollaryReport {
    pub corollary: CorollaryId,
    pub verdict: Verdict,
    /// Worst margin (count minus requirement); `≥ 0` means the inequality holds.
    pub margin: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<i64>,
    pub notes: Vec<String>,
}

impl CorollaryReport {
    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Satisfied
    }
}

fn verdict(ok: bool) -> Verdict {
    if ok { Verdict::Satisfied } else { Verdict::Undecided }
}

/// `χ(β₁, β₂)`: 0 if either is `∞`, else 1.
pub fn chi(b1: Beta, b2: Beta) -> i64 {
    if b1.is_infinite() || b2.is_infinite() { 0 } else { 1 }
}

/// An element of `S` and its norming constant, if known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Paired {
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
}

/// Worst value of `n_S(t) - (c·n_σ(t) + d)` over the step points.
fn worst_step_margin(spectrum: &[f64], s: &[f64], c: f64, d: f64) -> (f64, f64) {
    let mut ts: Vec<f64> = spectrum.iter().map(|v| v.abs()).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let mut worst = (-d, 0.0);
    for &t in &ts {
        let m = count_within(s, t) as f64 - c * count_within(spectrum, t) as f64 - d;
        if m < worst.0 {
            worst = (m, t);
        }
    }
    worst
}

fn check_subset(spectrum: &[f64], s: &[f64]) -> Result<()> {
    match s.iter().find(|v| !spectrum.contains(v)) {
        Some(v) => Err(Error::Input(format!("{v} is in S but not in the spectrum"))),
        None => Ok(()),
    }
}

fn density_check(
    id: CorollaryId,
    ell: f64,
    a: f64,
    beta: Beta,
    spectrum: &[f64],
    s: &[f64],
    weighted: bool,
    scale: f64,
) -> Result<CorollaryReport> {
    crate::potential::check_ell(ell)?;
    check_subset(spectrum, s)?;
    let coef = scale * a;
    let shift = scale * 0.5 * (a - 1.0) * ell - if beta.is_infinite() { 0.0 } else { coef };
    let (margin, t) = worst_step_margin(spectrum, s, coef, shift);
    let mut notes = vec![format!("n_S(t) ≥ {coef}·n_σ(t) + {shift} checked on t ≤ {}", spectrum.iter().fold(0.0f64, |m, v| m.max(v.abs())))];
    let boundary = (a - 1.0 / scale).abs() < 1e-12;
    let strict = is_half_negative(ell) && !weighted && boundary;
    if strict {
        notes.push("ℓ = -1/2 outside the weighted class at the boundary value of a: a strictly positive margin is required".into());
    }
    let ok = if strict { margin > 0.0 } else { margin >= -1e-12 };
    Ok(CorollaryReport { corollary: id, verdict: verdict(ok), margin, worst_t: Some(t), budget: None, notes })
}

/// Corollary 5.3: `n_S ≥ 2a n_σ + (a-1)ℓ` (`- 2a` for real β), `a ∈ (0, ½]`.
pub fn corollary_5_3(ell: f64, a: f64, beta: Beta, spectrum: &[f64], s: &[f64], weighted: bool) -> Result<CorollaryReport> {
    if !(a > 0.0 && a <= 0.5) {
        return domain(format!("a = {a} outside (0, 1/2]"));
    }
    density_check(CorollaryId::C5_3, ell, a, beta, spectrum, s, weighted, 2.0)
}

/// Corollary 5.2: `n_S ≥ a n_σ + (a-1)ℓ/2` (`- a/2` for real β), `a ∈ (0, 1]`,
/// with `ζ` known on `S`.
pub fn corollary_5_2(ell: f64, a: f64, beta: Beta, spectrum: &[f64], s: &[Paired], weighted: bool) -> Result<CorollaryReport> {
    if !(a > 0.0 && a <= 1.0) {
        return domain(format!("a = {a} outside (0, 1]"));
    }
    if let Some(p) = s.iter().find(|p| p.zeta.is_none()) {
        return Err(Error::Input(format!("S element {} carries no norming constant", p.value)));
    }
    let vals: Vec<f64> = s.iter().map(|p| p.value).collect();
    density_check(CorollaryId::C5_2, ell, a, beta, spectrum, &vals, weighted, 1.0)
}

/// Corollary 5.6 budget of omitted eigenvalues: `[ℓ/2] + k + 1` for `β = ∞`,
/// `[(ℓ+1)/2] + k + 1` for real β, one less for `ℓ = -½` outside the
/// weighted class.
pub fn half_inverse_budget(ell: f64, beta: Beta, k: u32, weighted: bool) -> i64 {
    let base = if beta.is_infinite() { (ell / 2.0).floor() } else { ((ell + 1.0) / 2.0).floor() } as i64;
    base + k as i64 + 1 - i64::from(is_half_negative(ell) && !weighted)
}

pub fn corollary_5_6(ell: f64, beta: Beta, k: u32, omitted: usize, weighted: bool) -> Result<CorollaryReport> {
    crate::potential::check_ell(ell)?;
    let budget = half_inverse_budget(ell, beta, k, weighted);
    let margin = (budget - omitted as i64) as f64;
    Ok(CorollaryReport {
        corollary: CorollaryId::C5_6,
        verdict: verdict(margin >= 0.0),
        margin,
        worst_t: None,
        budget: Some(budget),
        notes: vec![format!("q known on (1/2, 1), C^{{2k}} at 1/2 with k = {k}; {omitted} eigenvalues omitted")],
    })
}

/// Corollary 5.7 data: all of `σ(β₁)` (first `n` indices), `ζ` for
/// indices in `m`, eigenvalues of `σ(β₂)` at indices `given2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexedInput {
    pub ell: f64,
    pub beta1: Beta,
    pub beta2: Beta,
    pub n: usize,
    pub m: Vec<usize>,
    pub given2: Vec<usize>,
    /// Both spectra (first `n` each); needed only for `ℓ = -½` outside the
    /// weighted class when one β is `∞`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectra: Option<(Vec<f64>, Vec<f64>)>,
    #[serde(default = "yes")]
    pub weighted_class: bool,
}

fn yes() -> bool {
    true
}

fn check_pair(b1: Beta, b2: Beta) -> Result<()> {
    if b1 == b2 {
        return Err(Error::Input("β₁ and β₂ must differ".into()));
    }
    Ok(())
}

/// Decay fit of `ln t_n` against `ln √|a_n|` on the upper half. Eigenvalues
/// of one spectrum grow at least like `n²`, so a slope below -1 (upper 95%
/// bound) is enough for `Σ t_n < ∞`, however sparse the subset.
fn summable_by_decay(terms: &[f64], a: &[f64]) -> (bool, Option<LineFit>) {
    let half = terms.len() / 2;
    let (xs, ys): (Vec<f64>, Vec<f64>) = terms[half..]
        .iter()
        .zip(&a[half..])
        .filter(|(t, _)| **t > 0.0)
        .map(|(t, a)| (0.5 * a.abs().ln(), t.ln()))
        .unzip();
    if xs.is_empty() {
        return (true, None);
    }
    let fit = fit_line(&xs, &ys);
    (fit.map(|f| f.slope_ci95().1 < -1.1).unwrap_or(false), fit)
}

pub fn corollary_5_7(input: &IndexedInput) -> Result<CorollaryReport> {
    crate::potential::check_ell(input.ell)?;
    check_pair(input.beta1, input.beta2)?;
    let m: BTreeSet<usize> = input.m.iter().copied().filter(|&i| i >= 1 && i <= input.n).collect();
    let g: BTreeSet<usize> = input.given2.iter().copied().filter(|&i| i >= 1 && i <= input.n).collect();
    let missing = (1..=input.n).filter(|i| !m.contains(i) && !g.contains(i)).count() as i64;
    let surplus = g.intersection(&m).count() as i64;
    let chi = chi(input.beta1, input.beta2);
    let mut notes = vec![format!("χ = {chi}; {missing} indices outside M missing from σ(β₂), {surplus} extra")];
    let outside = is_half_negative(input.ell) && !input.weighted_class;
    let mut extra = 0;
    let mut remark_ok = true;
    if outside && chi == 1 {
        extra = 1;
        notes.push("ℓ = -1/2 outside the weighted class: one additional eigenvalue required".into());
    } else if outside {
        let Some((s1, s2)) = &input.spectra else {
            return Err(Error::Input("ℓ = -1/2 outside the weighted class needs both spectra for the growth condition".into()));
        };
        let (inf, fin) = if input.beta1.is_infinite() { (s1, s2) } else { (s2, s1) };
        let mut acc = 0.0;
        let (mut xs, mut ys) = (vec![], vec![]);
        for k in 1..=input.n.min(inf.len()).min(fin.len()) {
            if !m.contains(&k) && fin[k - 1] > 0.0 {
                acc += 0.5 * (inf[k - 1] / fin[k - 1]).ln();
            }
            xs.push(0.5 * inf[k - 1].abs().ln());
            ys.push(acc);
        }
        let fit = fit_line(&xs, &ys);
        remark_ok = fit.map(|f| f.slope_ci95().0 > 0.0).unwrap_or(false);
        notes.push(format!("log-gap sum grows like c·ln r with fitted c = {:?}", fit.map(|f| f.slope)));
    }
    let margin = (chi - extra - (missing - surplus)) as f64;
    Ok(CorollaryReport {
        corollary: CorollaryId::C5_7,
        verdict: verdict(margin >= 0.0 && remark_ok),
        margin,
        worst_t: None,
        budget: Some(chi - extra),
        notes,
    })
}

/// Corollaries 5.9 and 5.8 data: paired subsets `A ⊆ σ(β₁)` (with `ζ`
/// known) and `B ⊆ σ(β₂)`, the truncated `σ(β₂)`, and which of its
/// eigenvalues are supplied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnpairedInput {
    pub ell: f64,
    pub beta1: Beta,
    pub beta2: Beta,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub given2: Vec<f64>,
    #[serde(default = "yes")]
    pub weighted_class: bool,
}

fn unpaired_deficit(input: &UnpairedInput) -> Result<(i64, i64)> {
    check_pair(input.beta1, input.beta2)?;
    if input.a.len() != input.b.len() {
        return Err(Error::Input("A and B must be paired".into()));
    }
    check_subset(&input.sigma2, &input.b)?;
    check_subset(&input.sigma2, &input.given2)?;
    let missing = input.sigma2.iter().filter(|v| !input.b.contains(v) && !input.given2.contains(v)).count() as i64;
    let surplus = input.given2.iter().filter(|v| input.b.contains(v)).count() as i64;
    Ok((missing, surplus))
}

/// `A_{n,m}` for every `n ≤ m`, computed in log space.
pub fn residue_coefficients(a: &[f64], b: &[f64], m: usize) -> Result<Vec<f64>> {
    let m = m.min(a.len()).min(b.len());
    (0..m)
        .map(|n| {
            let an = a[n];
            if b[n] == 0.0 {
                return Err(Error::Input("b_n = 0".into()));
            }
            let mut sign = (an / b[n] * (an - b[n])).signum();
            let mut log = (an / b[n] * (an - b[n])).abs().ln();
            for j in (0..m).filter(|&j| j != n) {
                let f = a[j] / b[j] * (an - b[j]) / (an - a[j]);
                if !f.is_finite() {
                    return Err(Error::Input(format!("a_{} coincides with another a or b_j = 0", n + 1)));
                }
                sign *= f.signum();
                log += f.abs().ln();
            }
            Ok(sign * log.exp())
        })
        .collect()
}

pub fn corollary_5_9(input: &UnpairedInput) -> Result<CorollaryReport> {
    crate::potential::check_ell(input.ell)?;
    let (missing, surplus) = unpaired_deficit(input)?;
    let chi = chi(input.beta1, input.beta2);
    let extra = i64::from(is_half_negative(input.ell) && !input.weighted_class && chi == 0);
    let n = input.a.len();
    let full = residue_coefficients(&input.a, &input.b, n)?;
    let l1: Vec<f64> = full.iter().zip(&input.a).map(|(c, a)| c.abs() / (a * a)).collect();
    let (summable, fit) = summable_by_decay(&l1, &input.a);
    // Σ_{n≤m} |A_{n,m} - A_n|/a_n² with A_n ≈ A_{n,N}, at m = N/2
    let half = residue_coefficients(&input.a, &input.b, n / 2)?;
    let drift: f64 = half.iter().zip(&full).zip(&input.a).map(|((h, f), a)| (h - f).abs() / (a * a)).sum();
    let mut notes = vec![
        format!("Σ|A_n|/a_n² ≈ {:.6e}, decay fit {:?}", l1.iter().sum::<f64>(), fit.map(|f| f.slope)),
        format!("Σ|A_(n,N/2) - A_n|/a_n² = {drift:.6e}"),
        format!("{missing} eigenvalues of σ(β₂)∖B missing, {surplus} extra"),
    ];
    if extra == 1 {
        notes.push("ℓ = -1/2 outside the weighted class: one additional eigenvalue required".into());
    }
    let margin = (-extra - (missing - surplus)) as f64;
    Ok(CorollaryReport {
        corollary: CorollaryId::C5_9,
        verdict: verdict(margin >= 0.0 && summable && drift.is_finite()),
        margin,
        worst_t: None,
        budget: Some(-extra),
        notes,
    })
}

pub fn corollary_5_8(input: &UnpairedInput) -> Result<CorollaryReport> {
    crate::potential::check_ell(input.ell)?;
    let (missing, surplus) = unpaired_deficit(input)?;
    let chi = chi(input.beta1, input.beta2);
    let extra = i64::from(is_half_negative(input.ell) && !input.weighted_class && chi == 1);
    let logs: Vec<f64> = input.a.iter().zip(&input.b).map(|(a, b)| (a / b).abs().ln().abs()).collect();
    if input.a.iter().zip(&input.b).any(|(a, b)| a / b <= 0.0) {
        return Err(Error::Input("a_n/b_n must be positive for the product test".into()));
    }
    let (summable, fit) = summable_by_decay(&logs, &input.a);
    let margin = (chi - extra - (missing - surplus)) as f64;
    Ok(CorollaryReport {
        corollary: CorollaryId::C5_8,
        verdict: verdict(margin >= 0.0 && summable),
        margin,
        worst_t: None,
        budget: Some(chi - extra),
        notes: vec![
            format!("Σ|ln(a_n/b_n)| ≈ {:.6e}, decay fit {:?}", logs.iter().sum::<f64>(), fit.map(|f| f.slope)),
            format!("χ = {chi}; {missing} eigenvalues of σ(β₂)∖B missing, {surplus} extra"),
        ],
    })
}

/// Inputs for [`corollary_check`], one variant per corollary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "corollary")]
pub enum CorollaryInput {
    #[serde(rename = "5.3")]
    C5_3 { ell: f64, a: f64, beta: Beta, spectrum: Vec<f64>, s: Vec<f64>, #[serde(default = "yes")] weighted_class: bool },
    #[serde(rename = "5.2")]
    C5_2 { ell: f64, a: f64, beta: Beta, spectrum: Vec<f64>, s: Vec<Paired>, #[serde(default = "yes")] weighted_class: bool },
    #[serde(rename = "5.6")]
    C5_6 { ell: f64, beta: Beta, k: u32, omitted: usize, #[serde(default = "yes")] weighted_class: bool },
    #[serde(rename = "5.7")]
    C5_7(IndexedInput),
    #[serde(rename = "5.9")]
    C5_9(UnpairedInput),
    #[serde(rename = "5.8")]
    C5_8(UnpairedInput),
}

pub fn corollary_check(input: &CorollaryInput) -> Result<CorollaryReport> {
    match input {
        CorollaryInput::C5_3 { ell, a, beta, spectrum, s, weighted_class } => {
            corollary_5_3(*ell, *a, *beta, spectrum, s, *weighted_class)
        }
        CorollaryInput::C5_2 { ell, a, beta, spectrum, s, weighted_class } => {
            corollary_5_2(*ell, *a, *beta, spectrum, s, *weighted_class)
        }
        CorollaryInput::C5_6 { ell, beta, k, omitted, weighted_class } => {
            corollary_5_6(*ell, *beta, *k, *omitted, *weighted_class)
        }
        CorollaryInput::C5_7(i) => corollary_5_7(i),
        CorollaryInput::C5_9(i) => corollary_5_9(i),
        CorollaryInput::C5_8(i) => corollary_5_8(i),
    }
}
