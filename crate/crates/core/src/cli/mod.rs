//! The `bilab` experiment driver.
//!
//! A run reads a flat config (see [`config`]), dispatches to one library
//! module and writes a report that echoes the effective config and the crate
//! version. Reports contain no timestamps, so equal `(config, seed)` give
//! byte-identical output.
//!
//! Exit codes: 0 success, 1 failed self-test, 2 config error, 3 I/O error.

pub mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::Parser;
use serde::Serialize;
use serde_json::{json, Value};

pub use config::{Command, ConfigError, ExperimentConfig, Format};

use crate::embedding::{self, SetKind, StructuredSetSpec};
use crate::freiman::{self, IndexSet};
use crate::operators::{
    adjoint_mismatch, gaussian_operator, weyl_heisenberg, BilinearMap, Identity, LinearOperator, PartialCirculant,
    RowSelection, SignDiagonal, UniversalDemodulator,
};
use crate::phase::{self, StabilityVariant};
use crate::recovery::{self, SolverOptions};
use crate::rng::{complex_gaussian, seeded, split, GENERATOR};
use crate::rnmp;
use crate::signals;
use crate::C64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_SELFTEST_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

/// Output of one run. `passed` is false only for a failing self-test.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: Command,
    pub format: Format,
    pub json: String,
    pub csv: String,
    pub passed: bool,
}

impl Report {
    /// The report body in the configured format.
    pub fn body(&self) -> &str {
        match self.format {
            Format::Csv => &self.csv,
            Format::Json => &self.json,
        }
    }

    pub fn file_name(&self) -> String {
        let ext = match self.format {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        format!("{}.{ext}", self.command.name())
    }

    pub fn write_to(&self, dir: &Path) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        let path = dir.join(self.file_name());
        std::fs::write(&path, self.body()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}

struct Outcome {
    result: Value,
    csv_header: &'static str,
    csv_rows: Vec<String>,
    passed: bool,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn finish(cfg: &ExperimentConfig, out: Outcome) -> Report {
    let echo = cfg.echo();
    let envelope = json!({
        "tool": "bilab",
        "version": VERSION,
        "generator": GENERATOR,
        "config": echo,
        "passed": out.passed,
        "result": out.result,
    });
    let mut json = serde_json::to_string_pretty(&envelope).expect("reports serialize");
    json.push('\n');
    let mut csv = format!("# bilab {VERSION} generator={GENERATOR}\n");
    for (k, v) in &echo {
        let _ = writeln!(csv, "# {k} = {v}");
    }
    csv.push_str(out.csv_header);
    csv.push('\n');
    for row in &out.csv_rows {
        csv.push_str(row);
        csv.push('\n');
    }
    Report {
        command: cfg.command,
        format: cfg.format,
        json,
        csv,
        passed: out.passed,
    }
}

/// Runs one experiment. Deterministic in `(config, seed)`; the thread count
/// does not affect the result.
pub fn run(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let out = match cfg.command {
        Command::RnmpBound => rnmp_bound(cfg)?,
        Command::EmbedVerify => embed_verify(cfg)?,
        Command::RecoverSweep => recover_sweep(cfg)?,
        Command::PhaseStability => phase_stability(cfg)?,
        Command::FreimanSearch => freiman_search(cfg)?,
        Command::DemodSelftest => demod_selftest(cfg)?,
    };
    Ok(finish(cfg, out))
}

fn positive(cfg: &ExperimentConfig, key: &str, v: usize) -> Result<usize, CliError> {
    if v == 0 {
        return Err(CliError::Config(format!("key '{key}' must be positive for {}", cfg.command.name())));
    }
    Ok(v)
}

fn rnmp_bound(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let s = positive(cfg, "s", cfg.usize_or("s", 2))?;
    let f = positive(cfg, "f", cfg.usize_or("f", 2))?;
    let n = positive(cfg, "n", cfg.usize_or("n", 8))?;
    let trials = positive(cfg, "trials", cfg.usize_or("trials", 32))?;
    let budget = cfg.usize_or("det_budget", 200);
    let b = rnmp::rnmp_bounds(s, f, n, trials, budget, cfg.seed)?;
    let row = format!(
        "{},{},{},{},{},{},{},{:?}",
        b.s, b.f, b.n, b.n_effective, b.alpha_lower, b.alpha_empirical, b.beta, b.lower.method
    );
    Ok(Outcome {
        result: to_value(&b),
        csv_header: "s,f,n,n_effective,alpha_lower,alpha_empirical,beta,method",
        csv_rows: vec![row],
        passed: true,
    })
}

fn set_kind(name: &str) -> SetKind {
    match name {
        "sparse-vectors" => SetKind::SparseVectors,
        "sparse-rank-one-diff" => SetKind::SparseRankOneDiff,
        "sparse-low-rank" => SetKind::SparseLowRank,
        "symmetric-quadratic" => SetKind::SymmetricQuadratic,
        _ => SetKind::SparseRankOne,
    }
}

fn optional<T>(r: crate::Result<T>) -> Option<T> {
    r.ok()
}

fn embed_verify(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let n = positive(cfg, "n", cfg.usize_or("n", 32))?;
    let s = positive(cfg, "s", cfg.usize_or("s", 2))?;
    let f = positive(cfg, "f", cfg.usize_or("f", 2))?;
    let kappa = positive(cfg, "kappa", cfg.usize_or("kappa", 1))?;
    let trials = positive(cfg, "trials", cfg.usize_or("trials", 1000))?;
    let delta = cfg.f64_or("delta", 0.5);
    let c2 = cfg.f64_or("c2", 1.0);
    let bilinear = match cfg.str_or("bilinear", "circular-convolution") {
        "circular-convolution" => Some(BilinearMap::circular_convolution(n)?),
        "zero-padded-convolution" => Some(BilinearMap::zero_padded_convolution(n)?),
        "spreading" => Some(BilinearMap::spreading(n)?),
        _ => None,
    };
    let kind = set_kind(cfg.str_or("set", "sparse-rank-one"));
    let (n1, n2) = bilinear.as_ref().map_or((n, n), |b| (b.n1(), b.n2()));
    let spec = StructuredSetSpec { kind, n1, n2, s, f, kappa };
    spec.validate()?;
    let cols = bilinear.as_ref().map_or(spec.lifted_len(), |b| b.out_dim());
    let m_bilinear = optional(embedding::sample_complexity_bilinear(s, f, kappa, n, delta, c2));
    let ensemble = cfg.str_or("ensemble", "gaussian");
    let m = match ensemble {
        "identity" => cols,
        _ => cfg.usize_opt("m").or(m_bilinear).unwrap_or(cols).min(cols),
    };
    positive(cfg, "m", m)?;
    let phi: Arc<dyn LinearOperator> = match ensemble {
        "identity" => Arc::new(Identity::new(cols)),
        "universal-demodulator" => Arc::new(UniversalDemodulator::from_seed(m, cols, split(cfg.seed, 101))?),
        "partial-circulant" => Arc::new(PartialCirculant::new(
            m,
            cols,
            split(cfg.seed, 102),
            RowSelection::Seed(split(cfg.seed, 103)),
        )?),
        _ => Arc::new(gaussian_operator(m, cols, split(cfg.seed, 100))?),
    };
    let report = embedding::verify_embedding(phi.as_ref(), bilinear.as_ref(), &spec, trials, cfg.seed)?;
    let eps_hat = cfg.f64_or("eps_hat", delta / 7.0);
    let entropy = optional(embedding::entropy_sparse_lowrank(s, f, kappa, n, eps_hat));
    let rho = cfg.f64_or("rho", 1.0);
    let lambda = cfg.f64_or("lambda", 1.0);
    let c = cfg.f64_or("c", 1.0);
    let theory = json!({
        "m_bilinear": m_bilinear,
        "c2": c2,
        "eps_hat": eps_hat,
        "entropy": entropy,
        "jl_sparsity": entropy.and_then(|h| optional(embedding::jl_sparsity_requirement(rho, h))),
        "demodulator_m": entropy.and_then(|h| optional(embedding::demodulator_measurement_bound(lambda, h, n, delta, c))),
    });
    let csv = report.to_csv();
    let mut lines = csv.lines();
    let _header = lines.next();
    let rows: Vec<String> = lines.map(str::to_string).collect();
    Ok(Outcome {
        result: json!({ "m": m, "distortion": to_value(&report), "theory": theory }),
        csv_header: "trial_id,ratio,distortion,support_x,support_y",
        csv_rows: rows,
        passed: true,
    })
}

fn recover_sweep(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let n1 = positive(cfg, "n1", cfg.usize_or("n1", 16))?;
    let n2 = positive(cfg, "n2", cfg.usize_or("n2", 4))?;
    let s = cfg.usize_or("s", 2);
    let f = cfg.usize_or("f", 2);
    let trials = positive(cfg, "trials", cfg.usize_or("trials", 20))?;
    let m_values = cfg.usize_list("m_values").unwrap_or_else(|| {
        let top = n1 * n2;
        (1..=8).map(|k| (k * top).div_ceil(8)).collect()
    });
    let defaults = SolverOptions::default();
    let opts = SolverOptions {
        max_iterations: cfg.usize_or("max_iterations", defaults.max_iterations),
        tolerance: cfg.f64_or("tolerance", defaults.tolerance),
        penalty: cfg.f64_opt("penalty"),
    };
    let threshold = cfg.f64_or("threshold", 1e-3);
    let r = recovery::recovery_sweep(n1, n2, s, f, &m_values, trials, cfg.seed, threshold, &opts)?;
    let csv = r.to_csv();
    let rows = csv.lines().skip(1).map(str::to_string).collect();
    Ok(Outcome {
        result: to_value(&r),
        csv_header: "m,success_rate,trials,seed,successes,unconverged",
        csv_rows: rows,
        passed: true,
    })
}

fn phase_stability(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let n = positive(cfg, "n", cfg.usize_or("n", 3))?;
    let trials = positive(cfg, "trials", cfg.usize_or("trials", 1000))?;
    let variant = match cfg.str_or("variant", "padded") {
        "prime" => StabilityVariant::Prime,
        _ => StabilityVariant::Padded,
    };
    let e = phase::stability_constant_estimate(n, trials, cfg.seed, variant)?;
    let row = format!(
        "{},{},{},{},{},{},{},{}",
        e.n,
        cfg.str_or("variant", "padded"),
        e.measurement_dim,
        e.c_hat,
        e.c_monte_carlo,
        e.positive,
        e.excluded,
        e.trials
    );
    Ok(Outcome {
        result: to_value(&e),
        csv_header: "n,variant,measurement_dim,c_hat,c_monte_carlo,positive,excluded,trials",
        csv_rows: vec![row],
        passed: true,
    })
}

fn freiman_search(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let elements = cfg.i64_list("elements").unwrap_or_else(|| vec![0, 1, 10]);
    let a = IndexSet::new(elements)?;
    let budget = cfg.u64_or("budget", 10_000_000);
    let m = a.len();
    let d = cfg.usize_or("d", m.saturating_sub(2).max(1));
    let r = freiman::min_diameter_isomorphic_image(&a, budget)?;
    let bound = freiman::grynkiewicz_bound(m, d);
    let rows = r
        .map
        .source
        .iter()
        .zip(&r.map.image)
        .map(|(s, i)| format!("{s},{i}"))
        .collect();
    Ok(Outcome {
        result: json!({
            "set": a.elements(),
            "set_diameter": a.diameter(),
            "remap": to_value(&r),
            "d": d,
            "grynkiewicz_bound": bound,
            "within_bound": (r.diameter as f64) <= bound,
        }),
        csv_header: "source,image",
        csv_rows: rows,
        passed: true,
    })
}

#[derive(Debug, Clone, Serialize)]
struct Check {
    name: String,
    value: f64,
    tolerance: f64,
    pass: bool,
}

fn check(name: impl Into<String>, value: f64, tolerance: f64) -> Check {
    Check {
        name: name.into(),
        value,
        tolerance,
        pass: value <= tolerance,
    }
}

/// Largest `|‖Φx‖ - ‖x‖| / ‖x‖` over a few random inputs.
fn isometry_defect(op: &dyn LinearOperator, seed: u64) -> f64 {
    let mut rng = seeded(seed);
    (0..4)
        .map(|_| {
            let x: Vec<C64> = (0..op.cols()).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
            (signals::norm(&op.apply(&x)) - signals::norm(&x)).abs() / signals::norm(&x)
        })
        .fold(0.0, f64::max)
}

/// Largest entry of `|Φx - (dense Φ) x|` relative to `‖x‖`.
fn materialization_defect(op: &dyn LinearOperator, seed: u64) -> f64 {
    let dense = op.materialize();
    let mut rng = seeded(seed);
    let x: Vec<C64> = (0..op.cols()).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
    signals::norm(&signals::sub(&op.apply(&x), &dense.matvec(&x))) / signals::norm(&x)
}

fn demod_selftest(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let n = positive(cfg, "n", cfg.usize_or("n", 16))?;
    let m = positive(cfg, "m", cfg.usize_or("m", n.div_ceil(2)))?;
    let seed = cfg.seed;
    let demod = UniversalDemodulator::from_seed(m, n, split(seed, 1))?;
    let circ = PartialCirculant::new(m, n, split(seed, 2), RowSelection::Seed(split(seed, 3)))?;
    let full = PartialCirculant::new(n, n, split(seed, 4), RowSelection::Seed(split(seed, 5)))?;
    let signs = SignDiagonal::new(n, split(seed, 6))?;
    let wh = weyl_heisenberg(1 % n, 2 % n, n)?;
    let full_demod = UniversalDemodulator::from_seed(n, n, split(seed, 7))?;
    let mut checks = Vec::new();
    let named: [(&str, &dyn LinearOperator); 6] = [
        ("universal-demodulator", &demod),
        ("partial-circulant", &circ),
        ("full-circulant", &full),
        ("sign-diagonal", &signs),
        ("weyl-heisenberg", &wh),
        ("full-universal-demodulator", &full_demod),
    ];
    for (k, (name, op)) in named.iter().enumerate() {
        checks.push(check(format!("{name}/adjoint"), adjoint_mismatch(*op, split(seed, 10 + k as u64)), 1e-12));
        checks.push(check(format!("{name}/fft-vs-dense"), materialization_defect(*op, split(seed, 20 + k as u64)), 1e-10));
    }
    for (name, op) in [
        ("full-circulant", &full as &dyn LinearOperator),
        ("sign-diagonal", &signs),
        ("weyl-heisenberg", &wh),
        ("full-universal-demodulator", &full_demod),
    ] {
        checks.push(check(format!("{name}/unitarity"), isometry_defect(op, split(seed, 30)), 1e-12));
    }
    let passed = checks.iter().all(|c| c.pass);
    let rows = checks
        .iter()
        .map(|c| format!("{},{},{},{}", c.name, c.value, c.tolerance, c.pass))
        .collect();
    Ok(Outcome {
        result: json!({ "n": n, "m": m, "checks": to_value(&checks) }),
        csv_header: "check,value,tolerance,pass",
        csv_rows: rows,
        passed,
    })
}

#[derive(Debug, Parser)]
#[command(name = "bilab", version, about = "Experiments on sparse bilinear inverse problems")]
pub struct Args {
    /// Experiment config (flat `key = value` text).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for the report; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the config format.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for trial-parallel work.
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Loads the config and applies flag overrides.
pub fn load_config(args: &Args) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.config.display())))?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(seed) = args.seed {
        cfg.override_seed(seed);
    }
    if let Some(format) = args.format {
        cfg.override_format(format);
    }
    Ok(cfg)
}

fn execute(args: &Args) -> Result<(Report, Option<PathBuf>), CliError> {
    let cfg = load_config(args)?;
    let report = match args.threads {
        Some(0) => return Err(CliError::Config("--threads must be positive".into())),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?
            .install(|| run(&cfg))?,
        None => run(&cfg)?,
    };
    let path = match &args.out {
        Some(dir) => Some(report.write_to(dir)?),
        None => None,
    };
    Ok((report, path))
}

/// Parses arguments, runs and returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&args) {
        Ok((report, path)) => {
            match path {
                Some(p) => eprintln!("wrote {}", p.display()),
                None => print!("{}", report.body()),
            }
            if report.passed {
                EXIT_OK
            } else {
                eprintln!("self-test failed");
                EXIT_SELFTEST_FAILED
            }
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
