//! Reconstruction of `q` on `(0, a)` from mixed data by damped Gauss–Newton
//! (Levenberg–Marquardt), and a search for distinct potentials that fit
//! insufficient data equally well.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{BasisKind, Potential};
use crate::quadrature::{integrate, QuadConfig};
use crate::solver::SolverOptions;
use crate::spectrum::{eigenvalue, SpectrumOptions};
use crate::uniqueness::MixedDataset;

fn default_reg() -> f64 {
    1e-8
}

fn default_iter() -> usize {
    40
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReconstructionProblem {
    pub ell: f64,
    /// Target eigenvalues (each with its index) and norming constants.
    pub targets: MixedDataset,
    /// Known potential; only its values on `[a, 1)` are used.
    pub tail: Potential,
    pub basis: BasisKind,
    pub dim: usize,
    #[serde(default = "default_reg")]
    pub regularization: f64,
    #[serde(default = "default_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
    /// Ground truth for error reporting and for the probe.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<Potential>,
}

impl ReconstructionProblem {
    pub fn new(ell: f64, targets: MixedDataset, tail: Potential, basis: BasisKind, dim: usize) -> Self {
        Self {
            ell,
            targets,
            tail,
            basis,
            dim,
            regularization: default_reg(),
            max_iter: default_iter(),
            seed: 0,
            initial: None,
            truth: None,
        }
    }

    pub fn with_truth(mut self, q: Potential) -> Self {
        self.truth = Some(q);
        self
    }

    pub fn a(&self) -> f64 {
        self.targets.a
    }

    pub fn potential(&self, theta: &[f64]) -> Result<Potential> {
        Potential::expansion(self.a(), self.basis, theta.to_vec(), &self.tail)
    }

    /// Number of scalar data.
    pub fn data_count(&self) -> usize {
        self.targets.lambda.len() + self.targets.lambda.iter().filter(|r| r.in_s()).count()
    }

    fn validate(&self) -> Result<()> {
        self.targets.validate()?;
        if self.dim == 0 {
            return Err(Error::Input("parametrization dimension must be positive".into()));
        }
        if let Some(r) = self.targets.lambda.iter().find(|r| r.index.is_none()) {
            return Err(Error::Input(format!("target λ = {} has no index", r.value)));
        }
        if self.initial.as_ref().is_some_and(|t| t.len() != self.dim) {
            return Err(Error::Input("initial guess has the wrong dimension".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Local spectral gap `max(π², 2π√|λ|)`, the unit of eigenvalue residuals.
pub fn local_gap(lambda: f64) -> f64 {
    (2.0 * PI * lambda.abs().sqrt()).max(PI * PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatumKind {
    Eigenvalue,
    LogNorming,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatumResidual {
    pub kind: DatumKind,
    pub index: usize,
    pub target: f64,
    pub model: f64,
    /// `(λ - λ*)/gap` or `ln ζ - ln ζ*`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub regularization: f64,
    pub cost: f64,
    pub damping: f64,
    pub step_norm: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReconstructionResult {
    pub coeffs: Vec<f64>,
    pub potential: Potential,
    pub residuals: Vec<DatumResidual>,
    pub max_residual: f64,
    pub cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l2_error: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub trace: Vec<TraceEntry>,
}

impl ReconstructionResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

struct Model<'a> {
    problem: &'a ReconstructionProblem,
    opts: SpectrumOptions,
}

struct Evaluation {
    /// Objective residuals (raw λ units and ln ζ).
    raw: Vec<f64>,
    report: Vec<DatumResidual>,
}

impl Model<'_> {
    fn evaluate(&self, theta: &[f64]) -> Result<Evaluation> {
        let q = self.problem.potential(theta)?;
        let ell = self.problem.ell;
        let parts = self
            .problem
            .targets
            .lambda
            .par_iter()
            .map(|rec| {
                let n = rec.index.expect("validated");
                let opts = SpectrumOptions { norming: rec.in_s(), ..self.opts };
                let p = eigenvalue(ell, &q, rec.beta, n, &opts)?;
                let mut out = vec![(
                    p.lambda - rec.value,
                    DatumResidual {
                        kind: DatumKind::Eigenvalue,
                        index: n,
                        target: rec.value,
                        model: p.lambda,
                        residual: (p.lambda - rec.value) / local_gap(rec.value),
                    },
                )];
                if let (Some(target), Some(z)) = (rec.zeta, p.zeta) {
                    let r = z.ln() - target.ln();
                    out.push((r, DatumResidual { kind: DatumKind::LogNorming, index: n, target, model: z, residual: r }));
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?;
        let (raw, report) = parts.into_iter().flatten().unzip();
        Ok(Evaluation { raw, report })
    }

    fn cost(&self, raw: &[f64], theta: &[f64], extra: &[f64], reg: f64) -> f64 {
        raw.iter().chain(extra).map(|r| r * r).sum::<f64>() + reg * theta.iter().map(|t| t * t).sum::<f64>()
    }

    /// Forward-difference Jacobian, columns in parallel.
    fn jacobian(&self, theta: &[f64], base: &[f64]) -> Result<Vec<Vec<f64>>> {
        (0..theta.len())
            .into_par_iter()
            .map(|j| {
                let h = 1e-6 * theta[j].abs().max(1.0);
                let mut t = theta.to_vec();
                t[j] += h;
                let e = self.evaluate(&t)?;
                Ok(e.raw.iter().zip(base).map(|(a, b)| (a - b) / h).collect())
            })
            .collect()
    }
}

/// Extra residuals appended to the data residuals, with their Jacobian rows.
type Penalty<'a> = dyn Fn(&[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> + Sync + 'a;

struct LmOutcome {
    theta: Vec<f64>,
    eval: Evaluation,
    cost: f64,
    converged: bool,
    iterations: usize,
    trace: Vec<TraceEntry>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let m = nalgebra::DMatrix::from_fn(b.len(), b.len(), |i, j| a[i][j]);
    let v = nalgebra::DVector::from_column_slice(&b);
    let x = m.lu().solve(&v)?;
    a.clear();
    b.clear();
    Some(x.iter().copied().collect())
}

/// Regularization weights of the continuation stages.
fn reg_schedule(reg: f64) -> Vec<f64> {
    if reg > 0.0 { vec![reg, reg * 1e-4, reg * 1e-8] } else { vec![0.0] }
}

/// Run LM once per regularization stage, each starting where the last ended.
fn staged(model: &Model, theta0: Vec<f64>, penalty: Option<&Penalty>, stop: &dyn Fn(&Evaluation, &[f64]) -> bool) -> Result<LmOutcome> {
    let mut theta = theta0;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut last = None;
    for reg in reg_schedule(model.problem.regularization) {
        let mut lm = levenberg_marquardt(model, theta, penalty, stop, reg)?;
        iterations += lm.iterations;
        trace.append(&mut lm.trace);
        theta = lm.theta.clone();
        last = Some(lm);
    }
    let mut lm = last.expect("at least one stage");
    lm.iterations = iterations;
    lm.trace = trace;
    Ok(lm)
}

fn levenberg_marquardt(model: &Model, theta0: Vec<f64>, penalty: Option<&Penalty>, stop: &dyn Fn(&Evaluation, &[f64]) -> bool, reg: f64) -> Result<LmOutcome> {
    let p = model.problem;
    let extra_of = |t: &[f64]| -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        match penalty {
            Some(f) => f(t),
            None => Ok((vec![], vec![])),
        }
    };
    let mut theta = theta0;
    let mut eval = model.evaluate(&theta)?;
    let (mut extra, mut extra_jac) = extra_of(&theta)?;
    let mut cost = model.cost(&eval.raw, &theta, &extra, reg);
    let mut mu = 1e-3;
    let mut trace = Vec::new();
    let mut converged = stop(&eval, &theta);
    let mut it = 0;
    let mut last_step = f64::INFINITY;
    while !converged && it < p.max_iter {
        it += 1;
        let jac = model.jacobian(&theta, &eval.raw)?;
        let d = theta.len();
        // normal equations with the penalty rows appended
        let mut jtj = vec![vec![0.0; d]; d];
        let mut jtr = vec![0.0; d];
        let rows = eval.raw.len();
        for i in 0..rows {
            for a in 0..d {
                jtr[a] += jac[a][i] * eval.raw[i];
                for b in 0..d {
                    jtj[a][b] += jac[a][i] * jac[b][i];
                }
            }
        }
        for (r, row) in extra.iter().zip(&extra_jac) {
            for a in 0..d {
                jtr[a] += row[a] * r;
                for b in 0..d {
                    jtj[a][b] += row[a] * row[b];
                }
            }
        }
        for a in 0..d {
            jtr[a] += reg * theta[a];
            jtj[a][a] += reg;
        }
        let mut accepted = false;
        for _ in 0..12 {
            let mut m = jtj.clone();
            for a in 0..d {
                m[a][a] += mu * jtj[a][a].max(1e-12);
            }
            let Some(step) = solve_dense(m, jtr.iter().map(|v| -v).collect()) else {
                mu *= 10.0;
                continue;
            };
            let trial: Vec<f64> = theta.iter().zip(&step).map(|(t, s)| t + s).collect();
            let step_norm = step.iter().map(|s| s * s).sum::<f64>().sqrt();
            let outcome = model.evaluate(&trial).and_then(|e| {
                // an eigenvalue that moved by more than half a gap has
                // probably been exchanged with a neighbour
                let swapped = e.report.iter().zip(&eval.report).any(|(n, o)| {
                    n.kind == DatumKind::Eigenvalue && (n.model - o.model).abs() > 0.5 * local_gap(o.model)
                });
                if swapped { Err(Error::IndexSwap(format!("step of norm {step_norm:.3e}"))) } else { Ok(e) }
            });
            match outcome {
                Ok(e) => {
                    let (ex, exj) = extra_of(&trial)?;
                    let c = model.cost(&e.raw, &trial, &ex, reg);
                    if c < cost {
                        trace.push(TraceEntry { iteration: it, regularization: reg, cost: c, damping: mu, step_norm, accepted: true });
                        let small = step_norm <= 1e-9 * (1.0 + norm(&theta));
                        last_step = step_norm;
                        theta = trial;
                        eval = e;
                        extra = ex;
                        extra_jac = exj;
                        let gain = cost - c;
                        cost = c;
                        mu = (mu / 3.0).max(1e-12);
                        accepted = true;
                        converged = stop(&eval, &theta) || small || gain <= 1e-15 * cost.max(1e-300);
                        break;
                    }
                    trace.push(TraceEntry { iteration: it, regularization: reg, cost: c, damping: mu, step_norm, accepted: false });
                }
                Err(Error::IndexSwap(_)) | Err(Error::Completeness { .. }) => {
                    trace.push(TraceEntry { iteration: it, regularization: reg, cost: f64::NAN, damping: mu, step_norm, accepted: false });
                }
                Err(e) => return Err(e),
            }
            mu *= 4.0;
        }
        if !accepted {
            // finite-difference noise floor: no descent left after a tiny step
            converged = last_step <= 1e-6 * (1.0 + norm(&theta));
            break;
        }
    }
    Ok(LmOutcome { theta, eval, cost, converged, iterations: it, trace })
}

fn l2_distance(a: &Potential, b: &Potential, upper: f64) -> Result<f64> {
    let mut breaks: Vec<f64> = a.breakpoints().to_vec();
    breaks.extend_from_slice(b.breakpoints());
    let cfg = QuadConfig { abs_tol: 1e-14, rel_tol: 1e-10, ..Default::default() };
    Ok(integrate(|x| (a.value(x) - b.value(x)).powi(2), 0.0, upper, &breaks, &cfg)?.value.sqrt())
}

fn solver_options() -> SpectrumOptions {
    SpectrumOptions { solver: SolverOptions::default(), norming: false }
}

/// Minimise `Σ(λ_n(q_θ) - λ_n*)² + Σ(ln ζ_n(q_θ) - ln ζ_n*)² + reg‖θ‖²`.
pub fn reconstruct(problem: &ReconstructionProblem) -> Result<ReconstructionResult> {
    problem.validate()?;
    let model = Model { problem, opts: solver_options() };
    let theta0 = problem.initial.clone().unwrap_or_else(|| vec![0.0; problem.dim]);
    let lm = staged(&model, theta0, None, &|e, _| e.report.iter().all(|r| r.residual.abs() <= 1e-12))?;
    finish(problem, lm)
}

fn finish(problem: &ReconstructionProblem, lm: LmOutcome) -> Result<ReconstructionResult> {
    let potential = problem.potential(&lm.theta)?;
    let l2_error = match &problem.truth {
        Some(t) => Some(l2_distance(&potential, t, problem.a())?),
        None => None,
    };
    let max_residual = lm.eval.report.iter().map(|r| r.residual.abs()).fold(0.0, f64::max);
    Ok(ReconstructionResult {
        coeffs: lm.theta,
        potential,
        residuals: lm.eval.report,
        max_residual,
        cost: lm.cost,
        l2_error,
        converged: lm.converged,
        iterations: lm.iterations,
        trace: lm.trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ProbeOutcome {
    Found,
    NotFound,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeResult {
    pub outcome: ProbeOutcome,
    pub rho: f64,
    /// Best candidate (the ground truth itself when `ρ = 0`).
    pub candidate: Potential,
    pub distance: f64,
    pub max_residual: f64,
    pub attempts: usize,
    pub residual_tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeOptions {
    pub rho: f64,
    pub residual_tolerance: f64,
    pub restarts: usize,
    /// Weight of the hinge `max(0, 1.2ρ - ‖q_θ - q*‖)`.
    pub penalty_weight: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self { rho: 0.1, residual_tolerance: 1e-7, restarts: 4, penalty_weight: 10.0 }
    }
}

/// Look for `q̂` with `‖q̂ - q*‖_{L²(0,a)} ≥ ρ` reproducing every datum to the
/// residual tolerance. Starts from seeded random offsets of the ground truth
/// and minimises data misfit plus a hinge on the distance.
pub fn nonuniqueness_probe(problem: &ReconstructionProblem, popts: &ProbeOptions) -> Result<ProbeResult> {
    problem.validate()?;
    let truth = problem.truth.clone().ok_or_else(|| Error::Input("the probe needs a ground-truth potential".into()))?;
    if popts.rho <= 0.0 {
        return Ok(ProbeResult {
            outcome: ProbeOutcome::Found,
            rho: popts.rho,
            candidate: truth,
            distance: 0.0,
            max_residual: 0.0,
            attempts: 0,
            residual_tolerance: popts.residual_tolerance,
        });
    }
    let a = problem.a();
    let d = problem.dim;
    // least-squares projection of the truth for a starting point
    let centre = project(problem, &truth)?;
    let model = Model { problem, opts: solver_options() };
    let target = 1.2 * popts.rho;
    let w = popts.penalty_weight.sqrt();
    let penalty = |t: &[f64]| -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let q = problem.potential(t)?;
        let dist = l2_distance(&q, &truth, a)?;
        if dist >= target {
            return Ok((vec![0.0], vec![vec![0.0; t.len()]]));
        }
        // gradient of the distance by forward differences
        let grad = (0..t.len())
            .map(|j| {
                let h = 1e-6 * t[j].abs().max(1.0);
                let mut tt = t.to_vec();
                tt[j] += h;
                Ok((l2_distance(&problem.potential(&tt)?, &truth, a)? - dist) / h)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok((vec![w * (target - dist)], vec![grad.iter().map(|g| -w * g).collect()]))
    };
    let mut rng = ChaCha8Rng::seed_from_u64(problem.seed);
    let mut best: Option<ProbeResult> = None;
    for attempt in 1..=popts.restarts.max(1) {
        let dir: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
        // cells have L²(0,a) norm √(a/d)·|c|; other bases are scaled alike
        let scale = 2.0 * target / (a / d as f64).sqrt() / norm;
        let start: Vec<f64> = centre.iter().zip(&dir).map(|(c, u)| c + scale * u).collect();
        let tol = popts.residual_tolerance;
        let lm = staged(&model, start, Some(&penalty), &|e, t| {
            e.report.iter().all(|r| r.residual.abs() <= 0.1 * tol)
                && problem.potential(t).and_then(|q| l2_distance(&q, &truth, a)).map(|x| x >= popts.rho).unwrap_or(false)
        });
        let lm = match lm {
            Ok(lm) => lm,
            Err(Error::Completeness { .. }) | Err(Error::IndexSwap(_)) => continue,
            Err(e) => return Err(e),
        };
        let q = problem.potential(&lm.theta)?;
        let distance = l2_distance(&q, &truth, a)?;
        let max_residual = lm.eval.report.iter().map(|r| r.residual.abs()).fold(0.0, f64::max);
        let found = distance >= popts.rho && max_residual <= tol;
        let candidate = ProbeResult {
            outcome: if found { ProbeOutcome::Found } else { ProbeOutcome::NotFound },
            rho: popts.rho,
            candidate: q,
            distance,
            max_residual,
            attempts: attempt,
            residual_tolerance: tol,
        };
        if found {
            return Ok(candidate);
        }
        if best.as_ref().is_none_or(|b| candidate.max_residual < b.max_residual) {
            best = Some(candidate);
        }
    }
    best.ok_or_else(|| Error::Accuracy("every probe start failed in the forward solver".into()))
}

/// Coefficients whose expansion is closest to `q` in `L²(0, a)`.
fn project(problem: &ReconstructionProblem, q: &Potential) -> Result<Vec<f64>> {
    let d = problem.dim;
    let a = problem.a();
    let (xs, ws) = crate::quadrature::composite_gauss_legendre(0.0, a, 64 * d, 8);
    let unit = |j: usize| -> Result<Potential> {
        let mut e = vec![0.0; d];
        e[j] = 1.0;
        problem.potential(&e).and_then(|p| Ok(p.sum(&problem.potential(&vec![0.0; d])?.scaled(-1.0))))
    };
    let basis = (0..d).map(unit).collect::<Result<Vec<_>>>()?;
    let mut g = vec![vec![0.0; d]; d];
    let mut r = vec![0.0; d];
    for (x, w) in xs.iter().zip(&ws) {
        let vals: Vec<f64> = basis.iter().map(|b| b.value(*x)).collect();
        let qx = q.value(*x);
        for i in 0..d {
            r[i] += w * vals[i] * qx;
            for j in 0..d {
                g[i][j] += w * vals[i] * vals[j];
            }
        }
    }
    solve_dense(g, r).ok_or_else(|| Error::Accuracy("singular basis Gram matrix".into()))
}
