//! Command-line front end: flags or a TOML run file, JSON/CSV artifacts with
//! a provenance header, and exit codes 0 (ok), 2 (UNDECIDED), 1 (error).

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hfield::{beta_star, h_derivative, h_profile, real_zeros, HProfile};
use crate::inverse::{nonuniqueness_probe, reconstruct, ProbeOptions, ReconstructionProblem};
use crate::potential::{Exponent, Potential};
use crate::solver::{Beta, SolverOptions};
use crate::spectrum::{derivative_identity_residual, locate_eigenvalues, Spectrum, SpectrumOptions};
use crate::uniqueness::{
    build_system, closedness_diagnostic, corollary_check,
    counting::{criterion_margin_with, default_r_grid},
    CorollaryInput,
    MixedDataset, Verdict,
};

pub const OUT_DIR_ENV: &str = "BESSINV_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "bessinv", version, about = "Spectral tools for the perturbed Bessel operator on (0,1)")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Directory for artifacts; stdout when absent.
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    pub out: Option<PathBuf>,
    /// Relative ODE tolerance.
    #[arg(long, global = true)]
    pub rtol: Option<f64>,
    /// Absolute ODE tolerance (relative to the state norm).
    #[arg(long, global = true)]
    pub atol: Option<f64>,
    #[command(subcommand)]
    pub invocation: Invocation,
}

#[derive(Debug, Subcommand)]
pub enum Invocation {
    #[command(flatten)]
    Task(Command),
    /// Execute a TOML run file.
    Run {
        config: PathBuf,
    },
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Eigenvalues (and norming constants) for one or more β.
    Spectrum(SpectrumArgs),
    /// Scan H on a real window and locate its zeros.
    Hscan(HscanArgs),
    /// Counting criterion, corollary checks and closedness diagnostic.
    Uniqueness(UniquenessArgs),
    /// Least-squares reconstruction from a problem JSON.
    Reconstruct(ReconstructArgs),
    /// Search for a distinct potential fitting the same data.
    Probe(ProbeArgs),
    /// Identity checks.
    Verify(VerifyArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum(_) => "spectrum",
            Command::Hscan(_) => "hscan",
            Command::Uniqueness(_) => "uniqueness",
            Command::Reconstruct(_) => "reconstruct",
            Command::Probe(_) => "probe",
            Command::Verify(_) => "verify",
        }
    }
}

fn zero() -> String {
    "zero".into()
}
fn dirichlet() -> Vec<Beta> {
    vec![Beta::Infinite]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    #[serde(default)]
    pub ell: f64,
    /// Comma-separated list; `inf` for Dirichlet.
    #[arg(long, value_delimiter = ',', default_value = "inf", allow_negative_numbers = true)]
    #[serde(default = "dirichlet")]
    pub beta: Vec<Beta>,
    #[arg(long)]
    pub n: usize,
    /// `zero`, a number (constant potential) or a TOML/JSON potential file.
    #[arg(long, default_value = "zero")]
    #[serde(default = "zero")]
    pub q: String,
    /// Also compute ζ, κ and τ.
    #[arg(long)]
    #[serde(default)]
    pub norming: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    #[serde(default)]
    pub format: Format,
}

fn default_scan() -> usize {
    400
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HscanArgs {
    #[arg(long, default_value_t = 0.0)]
    #[serde(default)]
    pub ell: f64,
    #[arg(long)]
    pub q: String,
    #[arg(long)]
    pub qhat: String,
    /// Left end of the interval where q and q̂ are known to agree (recorded only).
    #[arg(long, default_value_t = 1.0)]
    #[serde(default = "one")]
    pub a: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub lo: f64,
    #[arg(long)]
    pub hi: f64,
    #[arg(long, default_value_t = 400)]
    #[serde(default = "default_scan")]
    pub n: usize,
}

fn one() -> f64 {
    1.0
}
fn default_grid_points() -> usize {
    400
}
fn default_slope_tol() -> f64 {
    crate::uniqueness::counting::DEFAULT_SLOPE_TOL
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniquenessArgs {
    /// Mixed dataset JSON.
    #[arg(long)]
    #[serde(default)]
    pub data: Option<PathBuf>,
    /// Override the dataset's `a`.
    #[arg(long)]
    #[serde(default)]
    pub a: Option<f64>,
    /// `R0:R1:N` (default 1 to √max|λ|).
    #[arg(long)]
    #[serde(default)]
    pub r_grid: Option<String>,
    #[arg(long, default_value_t = 400)]
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[arg(long, default_value_t = default_slope_tol())]
    #[serde(default = "default_slope_tol")]
    pub slope_tol: f64,
    /// Corollary input JSON.
    #[arg(long)]
    #[serde(default)]
    pub corollary: Option<PathBuf>,
    /// Truncation M of the closedness diagnostic (skipped when absent).
    #[arg(long)]
    #[serde(default)]
    pub closedness: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long)]
    #[serde(default)]
    pub regularization: Option<f64>,
    #[arg(long)]
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[arg(long, default_value_t = 4)]
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[arg(long, default_value_t = 1e-7)]
    #[serde(default = "default_probe_tol")]
    pub tol: f64,
    #[arg(long)]
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_rho() -> f64 {
    0.1
}
fn default_restarts() -> usize {
    4
}
fn default_probe_tol() -> f64 {
    1e-7
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum VerifyTarget {
    /// `Δ̇(λ_n) = -τ_n κ_n`.
    #[value(name = "lemma2.2")]
    #[serde(rename = "lemma2.2")]
    Lemma2_2,
}

fn default_verify_n() -> usize {
    10
}
fn default_verify_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub target: VerifyTarget,
    #[arg(long, default_value_t = 0.0)]
    #[serde(default)]
    pub ell: f64,
    #[arg(long, default_value = "zero")]
    #[serde(default = "zero")]
    pub q: String,
    #[arg(long, value_delimiter = ',', default_value = "inf", allow_negative_numbers = true)]
    #[serde(default = "dirichlet")]
    pub beta: Vec<Beta>,
    #[arg(long, default_value_t = 10)]
    #[serde(default = "default_verify_n")]
    pub n: usize,
    #[arg(long, default_value_t = 1e-6)]
    #[serde(default = "default_verify_tol")]
    pub tol: f64,
}

/// Contents of a TOML run file: global settings plus one command table.
///
/// ```toml
/// jobs = 2
/// [spectrum]
/// ell = 1.0
/// n = 10
/// ```
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atol: Option<f64>,
    #[serde(flatten)]
    pub command: Command,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::parse_in(text, None)
    }

    /// Relative file references are resolved against `base`.
    fn parse_in(text: &str, base: Option<&Path>) -> Result<Self> {
        let raw: RawConfig = {
            let de = toml::Deserializer::parse(text).map_err(|e| Error::Config(e.to_string()))?;
            serde_path_to_error::deserialize(de).map_err(|e| path_error("", e))?
        };
        let mut tables = [
            ("spectrum", raw.spectrum),
            ("hscan", raw.hscan),
            ("uniqueness", raw.uniqueness),
            ("reconstruct", raw.reconstruct),
            ("probe", raw.probe),
            ("verify", raw.verify),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k, v)));
        let (Some((name, table)), None) = (tables.next(), tables.next()) else {
            return Err(Error::Config("the run file needs exactly one command table".into()));
        };
        fn parse<T: serde::de::DeserializeOwned>(name: &str, table: toml::Table) -> Result<T> {
            serde_path_to_error::deserialize(table).map_err(|e| path_error(name, e))
        }
        let command = match name {
            "spectrum" => Command::Spectrum(parse(name, table)?),
            "hscan" => Command::Hscan(parse(name, table)?),
            "uniqueness" => Command::Uniqueness(parse(name, table)?),
            "reconstruct" => Command::Reconstruct(parse(name, table)?),
            "probe" => Command::Probe(parse(name, table)?),
            _ => Command::Verify(parse(name, table)?),
        };
        let mut cfg = Self { jobs: raw.jobs, out_dir: raw.out_dir, rtol: raw.rtol, atol: raw.atol, command };
        if let Some(dir) = base {
            cfg.command.rebase(dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse_in(&text, path.parent())
    }

    pub fn from_cli(cli: Cli) -> Result<Self> {
        let mut cfg = match cli.invocation {
            Invocation::Task(command) => RunConfig { jobs: None, out_dir: None, rtol: None, atol: None, command },
            Invocation::Run { config } => Self::load(&config)?,
        };
        cfg.jobs = cli.jobs.or(cfg.jobs);
        cfg.out_dir = cli.out.or(cfg.out_dir);
        cfg.rtol = cli.rtol.or(cfg.rtol);
        cfg.atol = cli.atol.or(cfg.atol);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: &str| Err(Error::Config(format!("at `{field}`: {why}")));
        if self.jobs == Some(0) {
            return bad("jobs", "must be at least 1");
        }
        for (name, v) in [("rtol", self.rtol), ("atol", self.atol)] {
            if v.is_some_and(|t| !(t > 0.0 && t < 1.0)) {
                return bad(name, "must lie in (0, 1)");
            }
        }
        let cmd = self.command.name();
        let field = |f: &str| format!("{cmd}.{f}");
        match &self.command {
            Command::Spectrum(a) => {
                if a.n == 0 {
                    return bad(&field("n"), "must be at least 1");
                }
                if a.beta.is_empty() {
                    return bad(&field("beta"), "needs at least one value");
                }
            }
            Command::Hscan(a) => {
                if !(a.hi > a.lo) {
                    return bad(&field("hi"), "must exceed `lo`");
                }
                if a.n < 2 {
                    return bad(&field("n"), "must be at least 2");
                }
            }
            Command::Uniqueness(a) => {
                if a.data.is_none() && a.corollary.is_none() {
                    return bad(&field("data"), "give `data` and/or `corollary`");
                }
                if a.a.is_some_and(|x| !(x > 0.0 && x <= 1.0)) {
                    return bad(&field("a"), "must lie in (0, 1]");
                }
                if let Some(g) = &a.r_grid {
                    parse_grid(g).map_err(|e| Error::Config(format!("at `{}`: {e}", field("r_grid"))))?;
                }
            }
            Command::Reconstruct(_) => {}
            Command::Probe(a) => {
                if !(a.rho >= 0.0) {
                    return bad(&field("rho"), "must be non-negative");
                }
            }
            Command::Verify(a) => {
                if a.n == 0 {
                    return bad(&field("n"), "must be at least 1");
                }
            }
        }
        for p in self.command.files() {
            if !p.exists() {
                return Err(Error::Config(format!("in `{cmd}`: file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn solver_options(&self) -> SolverOptions {
        let mut o = SolverOptions::default();
        if let Some(r) = self.rtol {
            o.ode.rtol = r;
        }
        if let Some(a) = self.atol {
            o.ode.atol = a;
        }
        o
    }

    /// Hex SHA-256 of the canonical JSON of the command and tolerances.
    pub fn hash(&self) -> String {
        let canon = serde_json::json!({ "command": &self.command, "rtol": self.rtol, "atol": self.atol });
        Sha256::digest(canon.to_string().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    jobs: Option<usize>,
    out_dir: Option<PathBuf>,
    rtol: Option<f64>,
    atol: Option<f64>,
    spectrum: Option<toml::Table>,
    hscan: Option<toml::Table>,
    uniqueness: Option<toml::Table>,
    reconstruct: Option<toml::Table>,
    probe: Option<toml::Table>,
    verify: Option<toml::Table>,
}

fn path_error<E: std::fmt::Display>(prefix: &str, e: serde_path_to_error::Error<E>) -> Error {
    let inner = e.path().to_string();
    let path = match (prefix.is_empty(), inner == ".") {
        (true, _) => inner,
        (false, true) => prefix.to_string(),
        (false, false) => format!("{prefix}.{inner}"),
    };
    Error::Config(format!("at `{path}`: {}", e.into_inner().to_string().trim()))
}

fn is_file_ref(s: &str) -> bool {
    s != "zero" && s.parse::<f64>().is_err()
}

impl Command {
    fn files(&self) -> Vec<PathBuf> {
        let mut out = Vec::new();
        let mut pot = |s: &String| {
            if is_file_ref(s) {
                out.push(PathBuf::from(s));
            }
        };
        match self {
            Command::Spectrum(a) => pot(&a.q),
            Command::Hscan(a) => {
                pot(&a.q);
                pot(&a.qhat);
            }
            Command::Verify(a) => pot(&a.q),
            Command::Uniqueness(a) => {
                out.extend(a.data.iter().cloned());
                out.extend(a.corollary.iter().cloned());
            }
            Command::Reconstruct(a) => out.push(a.problem.clone()),
            Command::Probe(a) => out.push(a.problem.clone()),
        }
        out
    }

    fn rebase(&mut self, dir: &Path) {
        let fix_path = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        let fix = |s: &mut String| {
            if is_file_ref(s) && Path::new(s).is_relative() {
                *s = dir.join(&*s).to_string_lossy().into_owned();
            }
        };
        match self {
            Command::Spectrum(a) => fix(&mut a.q),
            Command::Hscan(a) => {
                fix(&mut a.q);
                fix(&mut a.qhat);
            }
            Command::Verify(a) => fix(&mut a.q),
            Command::Uniqueness(a) => {
                a.data.iter_mut().for_each(fix_path);
                a.corollary.iter_mut().for_each(fix_path);
            }
            Command::Reconstruct(a) => fix_path(&mut a.problem),
            Command::Probe(a) => fix_path(&mut a.problem),
        }
    }
}

fn load_potential(s: &str) -> Result<Potential> {
    if s == "zero" {
        return Ok(Potential::zero());
    }
    if let Ok(c) = s.parse::<f64>() {
        return Ok(Potential::constant(c));
    }
    Potential::load(Path::new(s))
}

fn parse_grid(s: &str) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [r0, r1, n] = parts.as_slice() else {
        return Err(format!("expected R0:R1:N, got `{s}`"));
    };
    let r0: f64 = r0.parse().map_err(|_| format!("bad R0 `{r0}`"))?;
    let r1: f64 = r1.parse().map_err(|_| format!("bad R1 `{r1}`"))?;
    let n: usize = n.parse().map_err(|_| format!("bad N `{n}`"))?;
    if !(r0 > 0.0 && r1 > r0 && n >= 2) {
        return Err("need 0 < R0 < R1 and N ≥ 2".into());
    }
    Ok((0..n).map(|i| r0 + (r1 - r0) * i as f64 / (n - 1) as f64).collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub x0: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub tolerances: Tolerances,
    /// Seconds since the Unix epoch; the only field that varies between runs.
    pub timestamp: u64,
}

impl Provenance {
    pub fn new(cfg: &RunConfig) -> Self {
        let o = cfg.solver_options();
        let timestamp = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Self {
            tool: "bessinv".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: cfg.command.name().into(),
            config_hash: cfg.hash(),
            tolerances: Tolerances { rtol: o.ode.rtol, atol: o.ode.atol, x0: o.x0 },
            timestamp,
        }
    }

    fn csv_header(&self) -> String {
        format!(
            "# tool: {} {}\n# command: {}\n# config_hash: {}\n# rtol: {:.16e}\n# atol: {:.16e}\n# x0: {:.16e}\n# timestamp: {}\n",
            self.tool, self.version, self.command, self.config_hash, self.tolerances.rtol, self.tolerances.atol, self.tolerances.x0, self.timestamp
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Undecided,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Undecided => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: Status,
    pub artifacts: Vec<Artifact>,
    /// One-line summary for the terminal.
    pub summary: String,
}

fn json_doc<T: Serialize>(prov: &Provenance, result: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(&serde_json::json!({ "provenance": prov, "result": result }))?)
}

/// Execute the command. Errors carry the command name as provenance.
pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    let prov = Provenance::new(cfg);
    let opts = cfg.solver_options();
    let job = || -> Result<Outcome> {
        match &cfg.command {
            Command::Spectrum(a) => run_spectrum(a, &prov, &opts),
            Command::Hscan(a) => run_hscan(a, &prov, &opts),
            Command::Uniqueness(a) => run_uniqueness(a, &prov),
            Command::Reconstruct(a) => run_reconstruct(a, &prov),
            Command::Probe(a) => run_probe(a, &prov),
            Command::Verify(a) => run_verify(a, &prov, &opts),
        }
    };
    let out = match cfg.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(job),
        None => job(),
    };
    out.map_err(|e| tag(cfg.command.name(), e))
}

/// Prefix numeric failures with the command that raised them.
fn tag(module: &str, e: Error) -> Error {
    let p = |m: String| format!("[{module}] {m}");
    match e {
        Error::Domain(m) => Error::Domain(p(m)),
        Error::UnboundedNorm(m) => Error::UnboundedNorm(p(m)),
        Error::Quadrature(m) => Error::Quadrature(p(m)),
        Error::Accuracy(m) if !m.starts_with('[') => Error::Accuracy(p(m)),
        Error::NotAnEigenvalue(m) => Error::NotAnEigenvalue(p(m)),
        Error::Input(m) => Error::Input(p(m)),
        Error::IndexSwap(m) => Error::IndexSwap(p(m)),
        other => other,
    }
}

fn run_spectrum(a: &SpectrumArgs, prov: &Provenance, opts: &SolverOptions) -> Result<Outcome> {
    let q = load_potential(&a.q)?;
    let sopts = SpectrumOptions { solver: *opts, norming: a.norming };
    let spectra = a.beta.iter().map(|&b| locate_eigenvalues(a.ell, &q, b, a.n, &sopts)).collect::<Result<Vec<Spectrum>>>()?;
    let artifact = match a.format {
        Format::Csv => {
            let mut out = prov.csv_header();
            out.push_str("beta,n,lambda,zeta,kappa,tau,residual\n");
            let opt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
            for s in &spectra {
                for p in &s.points {
                    let _ = writeln!(out, "{},{},{:.16e},{},{},{},{:.16e}", s.beta, p.index, p.lambda, opt(p.zeta), opt(p.kappa), opt(p.tau), p.residual);
                }
            }
            Artifact { name: "spectrum.csv".into(), contents: out }
        }
        Format::Json => Artifact { name: "spectrum.json".into(), contents: json_doc(prov, &spectra)? },
    };
    let count: usize = spectra.iter().map(|s| s.points.len()).sum();
    Ok(Outcome { status: Status::Ok, artifacts: vec![artifact], summary: format!("{count} eigenvalues for {} β value(s)", spectra.len()) })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HZero {
    pub lambda: f64,
    /// β for which `λ` is a shared eigenvalue of `q` and `q̂`.
    pub beta: Beta,
    pub hdot: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HScan {
    pub profile: HProfile,
    pub zeros: Vec<HZero>,
}

fn run_hscan(a: &HscanArgs, prov: &Provenance, opts: &SolverOptions) -> Result<Outcome> {
    let q = load_potential(&a.q)?;
    let qhat = load_potential(&a.qhat)?;
    let grid: Vec<C64> = (0..a.n).map(|i| C64::new(a.lo + (a.hi - a.lo) * i as f64 / (a.n - 1) as f64, 0.0)).collect();
    let profile = h_profile(a.ell, &q, &qhat, a.a, &grid, false, opts)?;
    let zeros = real_zeros(a.ell, &q, &qhat, a.lo, a.hi, a.n, opts)?
        .into_iter()
        .map(|l| Ok(HZero { lambda: l, beta: beta_star(a.ell, &q, l, opts)?, hdot: h_derivative(a.ell, &q, &qhat, l, opts)? }))
        .collect::<Result<Vec<_>>>()?;
    let mut csv = prov.csv_header();
    csv.push_str("lambda,ln_abs_h,sign_h\n");
    for s in &profile.samples {
        let _ = writeln!(csv, "{:.16e},{:.16e},{}", s.lambda.re, s.h.ln_abs(), s.h.mantissa.re.signum());
    }
    let summary = format!("{} real zero(s) of H on [{}, {}]", zeros.len(), a.lo, a.hi);
    let scan = HScan { profile, zeros };
    Ok(Outcome {
        status: Status::Ok,
        artifacts: vec![
            Artifact { name: "hscan.json".into(), contents: json_doc(prov, &scan)? },
            Artifact { name: "hscan.csv".into(), contents: csv },
        ],
        summary,
    })
}

fn run_uniqueness(a: &UniquenessArgs, prov: &Provenance) -> Result<Outcome> {
    let mut artifacts = Vec::new();
    let mut verdicts = Vec::new();
    if let Some(path) = &a.data {
        let mut data = MixedDataset::load(path)?;
        if let Some(x) = a.a {
            data.a = x;
        }
        let grid = match &a.r_grid {
            Some(g) => parse_grid(g).map_err(Error::Config)?,
            None => default_r_grid(&data, a.grid_points),
        };
        let report = criterion_margin_with(&data, &grid, a.slope_tol)?;
        verdicts.push(format!("criterion {}", report.verdict));
        let mut csv = prov.csv_header();
        csv.push_str(&report.to_csv());
        artifacts.push(Artifact { name: "criterion.json".into(), contents: json_doc(prov, &report)? });
        artifacts.push(Artifact { name: "criterion.csv".into(), contents: csv });
        if let Some(m) = a.closedness {
            let system = build_system(&data)?;
            let p = match data.smoothness {
                Some(t) => t.p,
                None => Exponent::new(2.0)?,
            };
            let diag = closedness_diagnostic(&system, data.a, p, m)?;
            artifacts.push(Artifact {
                name: "closedness.json".into(),
                contents: json_doc(prov, &serde_json::json!({ "system": system.describe(), "diagnostic": diag }))?,
            });
        }
        if report.verdict == Verdict::Undecided {
            verdicts.push("UNDECIDED".into());
        }
    }
    if let Some(path) = &a.corollary {
        let input: CorollaryInput = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let report = corollary_check(&input)?;
        verdicts.push(format!("corollary {} {}", report.corollary, report.verdict));
        if report.verdict == Verdict::Undecided {
            verdicts.push("UNDECIDED".into());
        }
        artifacts.push(Artifact { name: "corollary.json".into(), contents: json_doc(prov, &report)? });
    }
    let status = if verdicts.iter().any(|v| v == "UNDECIDED") { Status::Undecided } else { Status::Ok };
    verdicts.retain(|v| v != "UNDECIDED");
    Ok(Outcome { status, artifacts, summary: verdicts.join("; ") })
}

fn load_problem(path: &Path) -> Result<ReconstructionProblem> {
    ReconstructionProblem::from_json(&std::fs::read_to_string(path)?)
}

fn run_reconstruct(a: &ReconstructArgs, prov: &Provenance) -> Result<Outcome> {
    let mut p = load_problem(&a.problem)?;
    if let Some(r) = a.regularization {
        p.regularization = r;
    }
    if let Some(m) = a.max_iter {
        p.max_iter = m;
    }
    if let Some(s) = a.seed {
        p.seed = s;
    }
    if p.dim > p.data_count() {
        eprintln!("warning: {} unknowns for {} data; the problem is under-determined", p.dim, p.data_count());
    }
    let r = reconstruct(&p)?;
    let summary = format!(
        "converged = {}, iterations = {}, max residual = {:.3e}{}",
        r.converged,
        r.iterations,
        r.max_residual,
        r.l2_error.map(|e| format!(", L² error = {e:.3e}")).unwrap_or_default()
    );
    Ok(Outcome { status: Status::Ok, artifacts: vec![Artifact { name: "reconstruction.json".into(), contents: json_doc(prov, &r)? }], summary })
}

fn run_probe(a: &ProbeArgs, prov: &Provenance) -> Result<Outcome> {
    let mut p = load_problem(&a.problem)?;
    if let Some(s) = a.seed {
        p.seed = s;
    }
    let r = nonuniqueness_probe(&p, &ProbeOptions { rho: a.rho, residual_tolerance: a.tol, restarts: a.restarts, ..Default::default() })?;
    let summary = format!("{:?}: distance {:.4}, max residual {:.3e}", r.outcome, r.distance, r.max_residual);
    Ok(Outcome { status: Status::Ok, artifacts: vec![Artifact { name: "probe.json".into(), contents: json_doc(prov, &r)? }], summary })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentityRow {
    pub beta: Beta,
    pub n: usize,
    pub lambda: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub target: VerifyTarget,
    pub rows: Vec<IdentityRow>,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn run_verify(a: &VerifyArgs, prov: &Provenance, opts: &SolverOptions) -> Result<Outcome> {
    let q = load_potential(&a.q)?;
    let sopts = SpectrumOptions { solver: *opts, norming: true };
    let mut rows = Vec::new();
    for &b in &a.beta {
        for p in locate_eigenvalues(a.ell, &q, b, a.n, &sopts)?.points {
            let residual = derivative_identity_residual(&p, a.ell, &q, opts)?;
            rows.push(IdentityRow { beta: b, n: p.index, lambda: p.lambda, residual });
        }
    }
    let max_residual = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    let report = VerifyReport { target: a.target, rows, max_residual, tolerance: a.tol, pass: max_residual <= a.tol };
    if !report.pass {
        return Err(Error::Accuracy(format!("[verify] max relative residual {max_residual:.3e} exceeds {:.1e}", a.tol)));
    }
    Ok(Outcome {
        status: Status::Ok,
        artifacts: vec![Artifact { name: "verify.json".into(), contents: json_doc(prov, &report)? }],
        summary: format!("lemma2.2: max relative residual {max_residual:.3e} ≤ {:.1e}", a.tol),
    })
}

/// Write artifacts to `dir`, or print them when there is no directory.
/// A closed stdout (`bessinv ... | head`) is not an error.
pub fn emit(outcome: &Outcome, dir: Option<&Path>) -> Result<()> {
    match print_artifacts(outcome, dir) {
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => r,
    }
}

fn print_artifacts(outcome: &Outcome, dir: Option<&Path>) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match dir {
        Some(d) => {
            std::fs::create_dir_all(d)?;
            for a in &outcome.artifacts {
                std::fs::write(d.join(&a.name), &a.contents)?;
            }
            writeln!(out, "{}", outcome.summary)?;
        }
        None => {
            // a single artifact goes to stdout as is; several are framed
            if let [only] = outcome.artifacts.as_slice() {
                write!(out, "{}", only.contents)?;
            } else {
                for a in &outcome.artifacts {
                    writeln!(out, "==> {} <==", a.name)?;
                    write!(out, "{}", a.contents)?;
                    if !a.contents.ends_with('\n') {
                        writeln!(out)?;
                    }
                }
            }
            out.flush()?;
            eprintln!("{}", outcome.summary);
        }
    }
    Ok(())
}

/// Parse, run, emit; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // help and version are not failures; usage errors exit 1 so that
            // 2 stays reserved for UNDECIDED
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = RunConfig::from_cli(cli).and_then(|cfg| {
        let outcome = run(&cfg)?;
        emit(&outcome, cfg.out_dir.as_deref())?;
        Ok(outcome.status)
    });
    match result {
        Ok(s) => s.exit_code(),
        Err(e) => {
            eprintln!("bessinv: {e}");
            1
        }
    }
}
