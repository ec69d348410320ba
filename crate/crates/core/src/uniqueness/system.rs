//! The function system `S_ℓ(Λ, S)` and a Gram/probe closedness diagnostic.
//!
//! The diagnostic is heuristic evidence only: a finite Gram matrix cannot
//! decide closedness of an infinite system.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::dataset::MixedDataset;
use crate::error::{domain, Result};
use crate::potential::Exponent;
use crate::quadrature::composite_gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemFunction {
    /// `x^{2k}`
    Monomial { k: u32 },
    /// `cos(2√λ x)`, `cosh(2√|λ| x)` for `λ < 0`.
    Cos { lambda: f64 },
    /// `x sin(2√λ x)`, `x sinh(2√|λ| x)` for `λ < 0` (the factor `i` dropped).
    XSin { lambda: f64 },
}

impl SystemFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            SystemFunction::Monomial { k } => x.powi(2 * k as i32),
            SystemFunction::Cos { lambda } if lambda >= 0.0 => (2.0 * lambda.sqrt() * x).cos(),
            SystemFunction::Cos { lambda } => (2.0 * (-lambda).sqrt() * x).cosh(),
            SystemFunction::XSin { lambda } if lambda >= 0.0 => x * (2.0 * lambda.sqrt() * x).sin(),
            SystemFunction::XSin { lambda } => x * (2.0 * (-lambda).sqrt() * x).sinh(),
        }
    }

    /// Angular frequency `2√|λ|` (0 for monomials).
    fn frequency(&self) -> f64 {
        match *self {
            SystemFunction::Monomial { .. } => 0.0,
            SystemFunction::Cos { lambda } | SystemFunction::XSin { lambda } => 2.0 * lambda.abs().sqrt(),
        }
    }
}

impl fmt::Display for SystemFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SystemFunction::Monomial { k: 0 } => write!(f, "1"),
            SystemFunction::Monomial { k } => write!(f, "x^{}", 2 * k),
            SystemFunction::Cos { lambda } if lambda < 0.0 => write!(f, "cosh(2·{:.6}x)", (-lambda).sqrt()),
            SystemFunction::Cos { lambda } => write!(f, "cos(2·{:.6}x)", lambda.sqrt()),
            SystemFunction::XSin { lambda } if lambda < 0.0 => write!(f, "x sinh(2·{:.6}x)", (-lambda).sqrt()),
            SystemFunction::XSin { lambda } => write!(f, "x sin(2·{:.6}x)", lambda.sqrt()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionSystem {
    pub ell: u32,
    /// Highest monomial index `K` in `{x^{2k} : k = 0..K}`.
    pub monomial_degree: u32,
    pub members: Vec<SystemFunction>,
}

impl FunctionSystem {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn describe(&self) -> Vec<String> {
        self.members.iter().map(|m| m.to_string()).collect()
    }
}

/// Monomials `x^{2k}`, `k ≤ K` with `K = ℓ, ℓ+1, ℓ+2` for `0 ∉ Λ`,
/// `0 ∈ Λ \ S`, `0 ∈ S`; then `cos(2√λ x)` for `λ ∈ Λ` and
/// `x sin(2√λ x)` for `λ ∈ S`, in data order.
///
/// At `λ = 0` the cosine equals the monomial `1` and the sine term
/// vanishes; those are carried by the extra monomials and left out.
pub fn build_system(data: &MixedDataset) -> Result<FunctionSystem> {
    let ell = data.ell;
    if ell < 0.0 || ell.fract() != 0.0 {
        return domain(format!("the function system needs a nonnegative integer ℓ, got {ell}"));
    }
    let ell = ell as u32;
    let k_max = if data.zero_in_s() {
        ell + 2
    } else if data.zero_in_lambda() {
        ell + 1
    } else {
        ell
    };
    let mut members: Vec<SystemFunction> = (0..=k_max).map(|k| SystemFunction::Monomial { k }).collect();
    members.extend(data.lambda.iter().filter(|r| r.value != 0.0).map(|r| SystemFunction::Cos { lambda: r.value }));
    members.extend(
        data.lambda.iter().filter(|r| r.value != 0.0 && r.in_s()).map(|r| SystemFunction::XSin { lambda: r.value }),
    );
    Ok(FunctionSystem { ell, monomial_degree: k_max, members })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClosednessDiagnostic {
    pub truncation: usize,
    pub a: f64,
    pub p: Exponent,
    /// Extreme singular values of the Gram matrix of the normalised members.
    pub gram_sigma_min: f64,
    pub gram_sigma_max: f64,
    /// `(ω, ‖g - Pg‖/‖g‖)` for each probe `g = cos(ωx)`.
    pub probe_residuals: Vec<(f64, f64)>,
    pub max_probe_residual: f64,
    pub note: String,
}

/// Angular frequencies `2πj/a`, `j = 0..m`, of the default Fourier probes.
pub fn fourier_probes(a: f64, m: usize) -> Vec<f64> {
    (0..m).map(|j| 2.0 * std::f64::consts::PI * j as f64 / a).collect()
}

/// Diagnostic on the first `m` members in `L²(0, a)` with Fourier probes.
pub fn closedness_diagnostic(system: &FunctionSystem, a: f64, p: Exponent, m: usize) -> Result<ClosednessDiagnostic> {
    closedness_with_probes(system, a, p, m, &fourier_probes(a, m))
}

/// As [`closedness_diagnostic`] with explicit probe frequencies.
pub fn closedness_with_probes(
    system: &FunctionSystem,
    a: f64,
    p: Exponent,
    m: usize,
    probes: &[f64],
) -> Result<ClosednessDiagnostic> {
    if m == 0 || m > system.len() {
        return domain(format!("truncation M = {m} outside 1..={}", system.len()));
    }
    if !(a > 0.0 && a <= 1.0) {
        return domain(format!("a = {a} outside (0, 1]"));
    }
    let members = &system.members[..m];
    let top = members.iter().map(|f| f.frequency()).chain(probes.iter().copied()).fold(0.0, f64::max);
    // ~4 panels of 16 nodes per oscillation, never fewer than 32 panels
    let panels = ((top * a / (2.0 * std::f64::consts::PI) * 4.0).ceil() as usize).max(32);
    let (xs, ws) = composite_gauss_legendre(0.0, a, panels, 16);
    let column = |f: &dyn Fn(f64) -> f64| -> DVector<f64> {
        let v = DVector::from_iterator(xs.len(), xs.iter().zip(&ws).map(|(&x, &w)| w.sqrt() * f(x)));
        let n = v.norm();
        if n > 0.0 { v / n } else { v }
    };
    let mut b = DMatrix::zeros(xs.len(), m);
    for (j, f) in members.iter().enumerate() {
        b.set_column(j, &column(&|x| f.eval(x)));
    }
    let svd = b.svd(true, false);
    let sv = &svd.singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let u = svd.u.as_ref().expect("U requested");
    let keep: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] > 1e-7 * smax).collect();

    let probe_residuals: Vec<(f64, f64)> = probes
        .iter()
        .map(|&w| {
            let g = column(&|x| (w * x).cos());
            let mut proj = DVector::zeros(g.len());
            for &i in &keep {
                let ui = u.column(i);
                proj += ui * ui.dot(&g);
            }
            (w, (g - proj).norm())
        })
        .collect();
    let max_probe_residual = probe_residuals.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(ClosednessDiagnostic {
        truncation: m,
        a,
        p,
        gram_sigma_min: smin * smin,
        gram_sigma_max: smax * smax,
        probe_residuals,
        max_probe_residual,
        note: "heuristic necessary-evidence diagnostic in L²(0,a); not a proof of closedness".into(),
    })
}

/// `σ_min` of the Gram matrix for each truncation in `ms`.
pub fn gram_trend(system: &FunctionSystem, a: f64, ms: &[usize]) -> Result<Vec<(usize, f64)>> {
    ms.iter().map(|&m| Ok((m, closedness_with_probes(system, a, Exponent::new(2.0)?, m, &[])?.gram_sigma_min))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Beta;
    use crate::uniqueness::dataset::EigenRecord;
    use std::f64::consts::PI;

    fn two() -> Exponent {
        Exponent::new(2.0).unwrap()
    }

    #[test]
    fn instantiation_cases() {
        let l = [PI * PI, 4.0 * PI * PI];
        let d = MixedDataset::from_values(0.0, 1.0, Beta::Infinite, &l, &[]).unwrap();
        let s = build_system(&d).unwrap();
        assert_eq!(s.describe(), vec!["1", "cos(2·3.141593x)", "cos(2·6.283185x)"]);
        assert!((s.members[2].eval(0.3) - (4.0 * PI * 0.3).cos()).abs() < 1e-14);

        let d = MixedDataset::from_values(0.0, 1.0, Beta::Infinite, &[0.0, PI * PI], &[]).unwrap();
        assert_eq!(build_system(&d).unwrap().monomial_degree, 1);

        let d = MixedDataset::from_values(1.0, 1.0, Beta::Infinite, &[0.0], &[0.0]).unwrap();
        let s = build_system(&d).unwrap();
        assert_eq!(s.describe(), vec!["1", "x^2", "x^4", "x^6"]);

        let d = MixedDataset::from_values(0.5, 1.0, Beta::Infinite, &[1.0], &[]).unwrap();
        assert!(build_system(&d).is_err());
    }

    #[test]
    fn negative_lambda_goes_hyperbolic() {
        let d = MixedDataset::new(0.0, 1.0, vec![EigenRecord::new(-4.0, Beta::Finite(-3.0)).with_zeta(0.2)]).unwrap();
        let s = build_system(&d).unwrap();
        assert!((s.members[1].eval(0.5) - 2f64.cosh()).abs() < 1e-14);
        assert!((s.members[2].eval(0.5) - 0.5 * 2f64.sinh()).abs() < 1e-14);
    }

    #[test]
    fn cosine_basis_reproduces_its_own_probes() {
        let l: Vec<f64> = (1..16).map(|n| (n as f64 * PI).powi(2)).collect();
        let d = MixedDataset::from_values(0.0, 1.0, Beta::Infinite, &l, &[]).unwrap();
        let s = build_system(&d).unwrap();
        let diag = closedness_diagnostic(&s, 1.0, two(), 16).unwrap();
        assert!(diag.max_probe_residual <= 1e-10, "{}", diag.max_probe_residual);
        assert!((diag.gram_sigma_min - 1.0).abs() < 1e-10);
        assert!(closedness_diagnostic(&s, 1.0, two(), 17).is_err());
    }

    #[test]
    fn orthogonal_probe_is_not_reached() {
        let d = MixedDataset::from_values(0.0, 1.0, Beta::Infinite, &[PI * PI], &[]).unwrap();
        let s = build_system(&d).unwrap();
        let diag = closedness_with_probes(&s, 1.0, two(), 2, &[6.0 * PI]).unwrap();
        assert!((diag.max_probe_residual - 1.0).abs() < 1e-10);
    }

    #[test]
    fn free_dirichlet_gram_floor() {
        let l: Vec<f64> = (1..=64).map(|n| (n as f64 * PI).powi(2)).collect();
        let d = MixedDataset::from_values(0.0, 1.0, Beta::Infinite, &l, &[]).unwrap();
        let s = build_system(&d).unwrap();
        for (_, smin) in gram_trend(&s, 1.0, &[4, 16, 64]).unwrap() {
            assert!(smin > 0.99);
        }
    }
}
