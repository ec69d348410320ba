//! Mixed spectral data: eigenvalues from several boundary problems, some
//! with known norming constants, plus the split point `a`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::potential::{check_ell, SmoothnessTag};
use crate::solver::Beta;

/// One eigenvalue `λ ∈ σ(ℓ, q, β)`. A present `zeta` puts it in `S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenRecord {
    pub value: f64,
    pub beta: Beta,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
}

impl EigenRecord {
    pub fn new(value: f64, beta: Beta) -> Self {
        Self { value, beta, zeta: None, index: None }
    }

    pub fn with_zeta(mut self, zeta: f64) -> Self {
        self.zeta = Some(zeta);
        self
    }

    pub fn with_index(mut self, index: usize) -> Self {
        self.index = Some(index);
        self
    }

    pub fn in_s(&self) -> bool {
        self.zeta.is_some()
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedDataset {
    pub ell: f64,
    pub a: f64,
    pub lambda: Vec<EigenRecord>,
    /// Smoothness of `q - q̂` at `a`. Absent means `k = 0, p = 1`
    /// (no condition at all).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothness: Option<SmoothnessTag>,
    #[serde(default = "yes")]
    pub weighted_class: bool,
}

impl MixedDataset {
    pub fn new(ell: f64, a: f64, lambda: Vec<EigenRecord>) -> Result<Self> {
        let d = Self { ell, a, lambda, smoothness: None, weighted_class: true };
        d.validate()?;
        Ok(d)
    }

    /// Dataset built from plain values. Members of `s` go into `S` with a
    /// placeholder `ζ = 1`.
    pub fn from_values(ell: f64, a: f64, beta: Beta, values: &[f64], s: &[f64]) -> Result<Self> {
        let records = values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let r = EigenRecord::new(v, beta).with_index(i + 1);
                if s.contains(&v) { r.with_zeta(1.0) } else { r }
            })
            .collect();
        Self::new(ell, a, records)
    }

    pub fn with_smoothness(mut self, tag: SmoothnessTag) -> Result<Self> {
        tag.validate(self.a)?;
        self.smoothness = Some(tag);
        Ok(self)
    }

    pub fn with_weighted_class(mut self, flag: bool) -> Self {
        self.weighted_class = flag;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_ell(self.ell)?;
        if !(self.a > 0.0 && self.a <= 1.0) {
            return domain(format!("split point a = {} outside (0, 1]", self.a));
        }
        let mut vals = Vec::with_capacity(self.lambda.len());
        for r in &self.lambda {
            if !r.value.is_finite() {
                return Err(Error::Input(format!("non-finite eigenvalue {}", r.value)));
            }
            if let Some(z) = r.zeta {
                if !(z > 0.0 && z.is_finite()) {
                    return Err(Error::Input(format!("norming constant {z} at λ = {} is not positive", r.value)));
                }
            }
            vals.push(r.value);
        }
        vals.sort_by(f64::total_cmp);
        if let Some(w) = vals.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Input(format!("eigenvalue {} listed twice", w[0])));
        }
        if let Some(tag) = &self.smoothness {
            tag.validate(self.a)?;
        }
        Ok(())
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.lambda.iter().map(|r| r.value).collect()
    }

    pub fn s_values(&self) -> Vec<f64> {
        self.lambda.iter().filter(|r| r.in_s()).map(|r| r.value).collect()
    }

    pub fn zero_in_lambda(&self) -> bool {
        self.lambda.iter().any(|r| r.value == 0.0)
    }

    pub fn zero_in_s(&self) -> bool {
        self.lambda.iter().any(|r| r.value == 0.0 && r.in_s())
    }

    /// `k + 2ℓ + 2 + 1/p'`, the log coefficient of the counting criterion.
    pub fn log_coefficient(&self) -> f64 {
        let (k, inv) = self.smoothness.map(|t| (t.k as f64, t.p.conjugate_reciprocal())).unwrap_or((0.0, 0.0));
        k + 2.0 * self.ell + 2.0 + inv
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let d: Self = serde_json::from_str(text)?;
        d.validate()?;
        Ok(d)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
