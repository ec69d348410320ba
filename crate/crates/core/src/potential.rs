//! Real potentials on (0,1).
//!
//! Three representations are supported: piecewise-constant cells, a finite
//! cosine or polynomial expansion on `(0, a)` glued to an explicit tail on
//! `(a, 1)`, and a sampled table with linear interpolation. Sums of these
//! are allowed so that perturbed pairs `q̂ = q + d` can be built without
//! resampling.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate, integrate_semi_infinite, QuadConfig};

/// Integrability exponent `p ∈ [1, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent(f64);

impl Exponent {
    pub const INFINITY: Exponent = Exponent(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return domain(format!("exponent p = {p} outside [1, ∞]"));
        }
        Ok(Exponent(p))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// `1/p'` for the conjugate exponent: 1 for `p = ∞`, `1 - 1/p` otherwise
    /// (so 0 when `p = 1`).
    pub fn conjugate_reciprocal(self) -> f64 {
        if self.0.is_infinite() {
            1.0
        } else {
            1.0 - 1.0 / self.0
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
pub(crate) enum NumOrText {
    Num(f64),
    Text(String),
}

pub(crate) fn parse_infinite(text: &str) -> bool {
    matches!(text.trim().to_ascii_lowercase().as_str(), "inf" | "infinity" | "∞" | "+inf")
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let p = match NumOrText::deserialize(d)? {
            NumOrText::Num(v) => v,
            NumOrText::Text(t) if parse_infinite(&t) => f64::INFINITY,
            NumOrText::Text(t) => t.parse().map_err(serde::de::Error::custom)?,
        };
        Exponent::new(p).map_err(serde::de::Error::custom)
    }
}

/// Smoothness of a potential (or of a potential difference) near the
/// split point `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessTag {
    /// Derivative order `k`.
    pub k: u32,
    pub p: Exponent,
    /// Radius `δ₀` of the left neighbourhood `(a - δ₀, a]`.
    pub delta0: f64,
    /// Number of derivatives known to vanish at `a`.
    #[serde(default)]
    pub vanishing: u32,
}

impl SmoothnessTag {
    pub fn validate(&self, a: f64) -> Result<()> {
        if !(self.delta0 > 0.0 && self.delta0 < a) {
            return domain(format!("δ₀ = {} must lie in (0, {a})", self.delta0));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    /// `Σ c_k cos(kπx/a)`
    Cosine,
    /// `Σ c_k x^k`
    Polynomial,
    /// `c_j` on the `j`-th of `len` equal cells of `(0, a)`
    Cells,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Representation {
    /// Value `values[i]` on the cell `[breaks[i-1], breaks[i])`, with the
    /// implicit outer breaks 0 and 1.
    Piecewise { breaks: Vec<f64>, values: Vec<f64> },
    /// Expansion on `(0, a)`; `tail` is used on `[a, 1)`.
    Basis {
        a: f64,
        basis: BasisKind,
        coeffs: Vec<f64>,
        tail: Box<Representation>,
    },
    /// Linear interpolation through `(xs, ys)`; constant beyond the ends.
    Table { xs: Vec<f64>, ys: Vec<f64> },
    Sum { terms: Vec<Representation> },
}

impl Representation {
    fn validate(&self) -> Result<()> {
        match self {
            Representation::Piecewise { breaks, values } => {
                if values.len() != breaks.len() + 1 {
                    return Err(Error::Input(format!(
                        "piecewise potential needs {} values, got {}",
                        breaks.len() + 1,
                        values.len()
                    )));
                }
                let inside = breaks.iter().all(|&b| b > 0.0 && b < 1.0);
                let increasing = breaks.windows(2).all(|w| w[0] < w[1]);
                if !inside || !increasing {
                    return Err(Error::Input(
                        "breakpoints must be strictly increasing within (0,1)".into(),
                    ));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Input("non-finite cell value".into()));
                }
            }
            Representation::Basis { a, coeffs, tail, .. } => {
                if !(*a > 0.0 && *a <= 1.0) {
                    return domain(format!("basis split a = {a} outside (0,1]"));
                }
                if coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Input("non-finite basis coefficient".into()));
                }
                tail.validate()?;
            }
            Representation::Table { xs, ys } => {
                if xs.len() < 2 || xs.len() != ys.len() {
                    return Err(Error::Input("table needs ≥ 2 matching samples".into()));
                }
                if !xs.windows(2).all(|w| w[0] < w[1]) {
                    return Err(Error::Input("table abscissae must increase".into()));
                }
                if ys.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Input("non-finite table value".into()));
                }
            }
            Representation::Sum { terms } => {
                for t in terms {
                    t.validate()?;
                }
            }
        }
        Ok(())
    }

    fn value(&self, x: f64) -> f64 {
        match self {
            Representation::Piecewise { breaks, values } => {
                values[breaks.partition_point(|&b| b <= x)]
            }
            Representation::Basis { a, basis, coeffs, tail } => {
                if x >= *a {
                    return tail.value(x);
                }
                match basis {
                    BasisKind::Cosine => coeffs
                        .iter()
                        .enumerate()
                        .map(|(k, c)| c * (k as f64 * PI * x / a).cos())
                        .sum(),
                    BasisKind::Polynomial => coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c),
                    BasisKind::Cells => {
                        let n = coeffs.len();
                        coeffs.get(((x / a * n as f64) as usize).min(n.saturating_sub(1))).copied().unwrap_or(0.0)
                    }
                }
            }
            Representation::Table { xs, ys } => {
                let n = xs.len();
                if x <= xs[0] {
                    return ys[0];
                }
                if x >= xs[n - 1] {
                    return ys[n - 1];
                }
                let i = xs.partition_point(|&t| t <= x) - 1;
                let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
                ys[i] + t * (ys[i + 1] - ys[i])
            }
            Representation::Sum { terms } => terms.iter().map(|t| t.value(x)).sum(),
        }
    }

    fn breakpoints(&self, out: &mut Vec<f64>) {
        match self {
            Representation::Piecewise { breaks, .. } => out.extend(breaks),
            Representation::Basis { a, basis, coeffs, tail } => {
                if *a < 1.0 {
                    out.push(*a);
                }
                if *basis == BasisKind::Cells {
                    let n = coeffs.len();
                    out.extend((1..n).map(|j| a * j as f64 / n as f64));
                }
                let mut t = Vec::new();
                tail.breakpoints(&mut t);
                out.extend(t.into_iter().filter(|b| b > a));
            }
            Representation::Table { .. } => {}
            Representation::Sum { terms } => terms.iter().for_each(|t| t.breakpoints(out)),
        }
    }

    fn scaled(&self, c: f64) -> Representation {
        match self {
            Representation::Piecewise { breaks, values } => Representation::Piecewise {
                breaks: breaks.clone(),
                values: values.iter().map(|v| c * v).collect(),
            },
            Representation::Basis { a, basis, coeffs, tail } => Representation::Basis {
                a: *a,
                basis: *basis,
                coeffs: coeffs.iter().map(|v| c * v).collect(),
                tail: Box::new(tail.scaled(c)),
            },
            Representation::Table { xs, ys } => Representation::Table {
                xs: xs.clone(),
                ys: ys.iter().map(|v| c * v).collect(),
            },
            Representation::Sum { terms } => Representation::Sum {
                terms: terms.iter().map(|t| t.scaled(c)).collect(),
            },
        }
    }
}

/// A real potential on (0,1) with its split point and smoothness metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    #[serde(flatten)]
    repr: Representation,
    /// Split point `a ∈ (0, 1]` separating the unknown part from the known tail.
    #[serde(default = "one")]
    pub split: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothness: Option<SmoothnessTag>,
    /// Declared membership in the log-weighted class used when `ℓ = -1/2`.
    #[serde(default = "yes")]
    pub weighted_class: bool,
    #[serde(skip)]
    breaks: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

impl Potential {
    pub fn new(repr: Representation) -> Result<Self> {
        repr.validate()?;
        let mut breaks = Vec::new();
        repr.breakpoints(&mut breaks);
        breaks.retain(|&b| b > 0.0 && b < 1.0);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        Ok(Self { repr, split: 1.0, smoothness: None, weighted_class: true, breaks })
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(Representation::Piecewise { breaks: vec![], values: vec![c] })
            .expect("constant potential is valid")
    }

    pub fn piecewise(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(Representation::Piecewise { breaks, values })
    }

    /// `n` equal cells on `(0, a)` with the given values followed by `tail`
    /// on `[a, 1)`.
    pub fn cells(a: f64, values: &[f64], tail: f64) -> Result<Self> {
        let n = values.len();
        let mut breaks: Vec<f64> = (1..n).map(|i| a * i as f64 / n as f64).collect();
        let mut vals = values.to_vec();
        if a < 1.0 {
            breaks.push(a);
            vals.push(tail);
        }
        Self::piecewise(breaks, vals)
    }

    /// `Σ c_k x^k` on `(0, a)` and `tail` on `[a, 1)`.
    pub fn polynomial(a: f64, coeffs: Vec<f64>, tail: Potential) -> Result<Self> {
        Self::new(Representation::Basis {
            a,
            basis: BasisKind::Polynomial,
            coeffs,
            tail: Box::new(tail.repr),
        })
    }

    /// Expansion of the given kind on `(0, a)` and `tail` on `[a, 1)`.
    pub fn expansion(a: f64, basis: BasisKind, coeffs: Vec<f64>, tail: &Potential) -> Result<Self> {
        Self::new(Representation::Basis { a, basis, coeffs, tail: Box::new(tail.repr.clone()) })
    }

    /// `Σ c_k cos(kπx/a)` on `(0, a)` and `tail` on `[a, 1)`.
    pub fn cosine(a: f64, coeffs: Vec<f64>, tail: Potential) -> Result<Self> {
        Self::new(Representation::Basis {
            a,
            basis: BasisKind::Cosine,
            coeffs,
            tail: Box::new(tail.repr),
        })
    }

    /// Sample `f` on `n` uniform points of `[0, 1]` for linear interpolation.
    pub fn tabulate<F: Fn(f64) -> f64>(f: F, n: usize) -> Result<Self> {
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let ys = xs.iter().map(|&x| f(x)).collect();
        Self::new(Representation::Table { xs, ys })
    }

    pub fn table(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        Self::new(Representation::Table { xs, ys })
    }

    pub fn with_split(mut self, a: f64) -> Result<Self> {
        if !(a > 0.0 && a <= 1.0) {
            return domain(format!("split a = {a} outside (0,1]"));
        }
        if let Some(tag) = &self.smoothness {
            tag.validate(a)?;
        }
        self.split = a;
        Ok(self)
    }

    pub fn with_smoothness(mut self, tag: SmoothnessTag) -> Result<Self> {
        tag.validate(self.split)?;
        self.smoothness = Some(tag);
        Ok(self)
    }

    pub fn with_weighted_class(mut self, flag: bool) -> Self {
        self.weighted_class = flag;
        self
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    /// Rebuild cached data after deserialization.
    pub fn finalize(self) -> Result<Self> {
        let Potential { repr, split, smoothness, weighted_class, .. } = self;
        let mut p = Potential::new(repr)?.with_split(split)?;
        if let Some(tag) = smoothness {
            p = p.with_smoothness(tag)?;
        }
        Ok(p.with_weighted_class(weighted_class))
    }

    pub fn sum(&self, other: &Potential) -> Potential {
        let repr = Representation::Sum { terms: vec![self.repr.clone(), other.repr.clone()] };
        let mut p = Potential::new(repr).expect("sum of valid potentials");
        p.split = self.split;
        p.smoothness = self.smoothness;
        p.weighted_class = self.weighted_class && other.weighted_class;
        p
    }

    pub fn scaled(&self, c: f64) -> Potential {
        let mut p = Potential::new(self.repr.scaled(c)).expect("scaled potential is valid");
        p.split = self.split;
        p.smoothness = self.smoothness;
        p.weighted_class = self.weighted_class;
        p
    }

    pub fn shifted(&self, c: f64) -> Potential {
        self.sum(&Potential::constant(c))
    }

    /// `q(x)` for `x ∈ (0,1)`; cells are left-closed.
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        if !(x > 0.0 && x < 1.0) {
            return domain(format!("x = {x} outside (0,1)"));
        }
        Ok(self.repr.value(x))
    }

    /// Unchecked evaluation on the closed interval, used by the integrator.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        self.repr.value(x)
    }

    /// Interior points where the potential may jump.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    pub fn l1_norm(&self) -> Result<f64> {
        Ok(integrate(|x| self.value(x).abs(), 0.0, 1.0, &self.breaks, &QuadConfig::default())?.value)
    }

    /// `∫₀¹ q̃`, where `q̃ = |q|` for `ℓ > -1/2` and `q̃ = |(1 - ln x) q|` for
    /// `ℓ = -1/2` (the latter via `x = e^{-u}`).
    pub fn weighted_norm(&self, ell: f64) -> Result<f64> {
        check_ell(ell)?;
        if !is_half_negative(ell) {
            return self.l1_norm();
        }
        let ubreaks: Vec<f64> = self.breaks.iter().map(|b| -b.ln()).collect();
        let f = |u: f64| {
            let x = (-u).exp();
            (1.0 + u) * self.value(x).abs() * x
        };
        Ok(integrate_semi_infinite(f, &ubreaks, &QuadConfig::default())?.value)
    }

    /// `R(λ) = ∫₀¹ y q̃(y) / (1 + |λ|^{1/2} y) dy`.
    pub fn remainder_r(&self, ell: f64, lambda: f64) -> Result<f64> {
        check_ell(ell)?;
        if lambda < 0.0 {
            return domain(format!("λ = {lambda} must be nonnegative"));
        }
        let s = lambda.sqrt();
        let weighted = is_half_negative(ell);
        let f = |y: f64| {
            if y <= 0.0 {
                return 0.0;
            }
            let qt = if weighted { ((1.0 - y.ln()) * self.value(y)).abs() } else { self.value(y).abs() };
            y * qt / (1.0 + s * y)
        };
        Ok(integrate(f, 0.0, 1.0, &self.breaks, &QuadConfig::default())?.value)
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn content_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("potential serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let p: Potential = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        p.finalize()
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            let p: Potential = serde_json::from_str(&text)?;
            p.finalize()
        } else {
            Self::from_toml_str(&text)
        }
    }
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.repr {
            Representation::Piecewise { values, .. } => format!("piecewise[{}]", values.len()),
            Representation::Basis { basis, coeffs, .. } => format!("{basis:?}[{}]", coeffs.len()),
            Representation::Table { xs, .. } => format!("table[{}]", xs.len()),
            Representation::Sum { terms } => format!("sum[{}]", terms.len()),
        };
        write!(f, "{kind} (a = {})", self.split)
    }
}

pub(crate) fn is_half_negative(ell: f64) -> bool {
    (ell + 0.5).abs() < 1e-12
}

pub(crate) fn check_ell(ell: f64) -> Result<()> {
    if !(ell >= -0.5 - 1e-12) || !ell.is_finite() {
        return domain(format!("ℓ = {ell} must be ≥ -1/2"));
    }
    Ok(())
}
