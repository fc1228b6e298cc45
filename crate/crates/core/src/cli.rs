//! Command-line front end. Reads Matrix Market inputs, runs one solve and
//! prints a single JSON object.
//!
//! Exit codes: 0 on success, 2 when a level is proven infeasible, 1 on
//! usage, input or IO errors, 3 when the solver reports an internal failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde::Serialize;

use crate::eigsolve::RngState;
use crate::error::Error;
use crate::refsolver::{solve_dense_exact, DenseProblem, MAX_DIM};
use crate::sparsemat::{load_matrix_market, load_vector, write_vector};
use crate::trustregion::{FeasibilityOutcome, Solver, TrustRegionProblem};

/// Vectors longer than this go to a sidecar file instead of the JSON body.
pub const INLINE_X_LIMIT: usize = 1000;
const STDOUT_SIDECAR: &str = "trsolve_x.txt";
const REFERENCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Maximize,
    Feasibility,
    Reference,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Maximize => "maximize",
            Mode::Feasibility => "feasibility",
            Mode::Reference => "reference",
        }
    }
}

/// Approximately maximize xᵀAx + 2bᵀx subject to xᵀMx <= 1.
#[derive(Debug, Parser)]
#[command(name = "trsolve", version, about)]
pub struct CliArgs {
    #[arg(long, value_enum, default_value = "maximize")]
    pub mode: Mode,
    /// Symmetric matrix A (Matrix Market coordinate).
    #[arg(long)]
    pub matrix_a: PathBuf,
    /// Linear term b (Matrix Market array or one value per line).
    #[arg(long)]
    pub vector_b: PathBuf,
    /// Positive definite M; identity when omitted.
    #[arg(long)]
    pub matrix_m: Option<PathBuf>,
    /// Objective level for feasibility mode.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write JSON here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Cross-check against the dense reference solver (n <= 64).
    #[arg(long)]
    pub reference: bool,
}

/// Validated configuration.
#[derive(Debug, Clone)]
pub struct CliConfig {
    pub mode: Mode,
    pub matrix_a: PathBuf,
    pub vector_b: PathBuf,
    pub matrix_m: Option<PathBuf>,
    pub c: Option<f64>,
    pub eps: f64,
    pub delta: f64,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub reference: bool,
}

impl CliConfig {
    pub fn from_args(args: CliArgs) -> Result<Self, Failure> {
        let in_unit = |v: f64| v > 0.0 && v < 1.0;
        if !in_unit(args.epsilon) {
            return Err(Failure::usage(format!(
                "--epsilon must lie in (0, 1), got {}",
                args.epsilon
            )));
        }
        if !in_unit(args.delta) {
            return Err(Failure::usage(format!(
                "--delta must lie in (0, 1), got {}",
                args.delta
            )));
        }
        if args.mode == Mode::Feasibility && args.c.is_none() {
            return Err(Failure::usage("--mode feasibility requires --c".into()));
        }
        if let Some(c) = args.c {
            if !c.is_finite() || c < 0.0 {
                return Err(Failure::usage(format!("--c must be a non-negative number, got {c}")));
            }
        }
        Ok(CliConfig {
            mode: args.mode,
            matrix_a: args.matrix_a,
            vector_b: args.vector_b,
            matrix_m: args.matrix_m,
            c: args.c,
            eps: args.epsilon,
            delta: args.delta,
            seed: args.seed,
            output: args.output,
            reference: args.reference,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Failure {
    pub kind: &'static str,
    pub message: String,
    pub exit_code: i32,
}

impl Failure {
    fn usage(message: String) -> Self {
        Failure {
            kind: "usage_error",
            message,
            exit_code: 1,
        }
    }

    fn at(path: &Path, err: Error) -> Self {
        let mut f = Failure::from(err);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let exit_code = match err {
            Error::InternalInconsistency(_)
            | Error::NumericalDegeneracy(_)
            | Error::ContractViolation(_)
            | Error::OracleFailure(_) => 3,
            _ => 1,
        };
        Failure {
            kind: err.kind(),
            message: err.to_string(),
            exit_code,
        }
    }
}

#[derive(Debug, Serialize)]
struct Estimates {
    lambda_hat: f64,
    mu_hat: f64,
    kappa_hat: f64,
}

#[derive(Debug, Serialize)]
struct ReferenceCheck {
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    /// Reference value minus reported value.
    #[serde(skip_serializing_if = "Option::is_none")]
    gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    skipped: Option<String>,
}

/// The JSON result object. Field order is the serialization order.
#[derive(Debug, Serialize)]
struct Report {
    status: &'static str,
    mode: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    x: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    x_file: Option<String>,
    oracle_calls: u64,
    matvecs: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    outer_iterations: Option<usize>,
    eps: f64,
    delta: f64,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    level: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    upper_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    estimates: Option<Estimates>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reference: Option<ReferenceCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error_kind: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<String>,
    wall_time_ms: u64,
}

impl Report {
    fn new(status: &'static str, mode: Mode, eps: f64, delta: f64, seed: u64) -> Self {
        Report {
            status,
            mode: mode.name(),
            value: None,
            x: None,
            x_file: None,
            oracle_calls: 0,
            matvecs: 0,
            outer_iterations: None,
            eps,
            delta,
            seed,
            n: None,
            level: None,
            upper_bound: None,
            estimates: None,
            reference: None,
            error_kind: None,
            message: None,
            wall_time_ms: 0,
        }
    }

    fn error(failure: &Failure, mode: Mode, eps: f64, delta: f64, seed: u64) -> Self {
        let mut r = Report::new("error", mode, eps, delta, seed);
        r.error_kind = Some(failure.kind);
        r.message = Some(failure.message.clone());
        r
    }
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::at(path, Error::Io(e)))
}

fn load_problem(cfg: &CliConfig) -> Result<TrustRegionProblem, Failure> {
    let a = load_matrix_market(open(&cfg.matrix_a)?).map_err(|e| Failure::at(&cfg.matrix_a, e))?;
    let b = load_vector(open(&cfg.vector_b)?).map_err(|e| Failure::at(&cfg.vector_b, e))?;
    let m = match &cfg.matrix_m {
        Some(path) => Some(load_matrix_market(open(path)?).map_err(|e| Failure::at(path, e))?),
        None => None,
    };
    Ok(TrustRegionProblem::new(a, b, m)?)
}

fn sidecar_path(cfg: &CliConfig) -> PathBuf {
    match &cfg.output {
        Some(out) => {
            let mut s = out.clone().into_os_string();
            s.push(".x");
            PathBuf::from(s)
        }
        None => PathBuf::from(STDOUT_SIDECAR),
    }
}

fn attach_x(report: &mut Report, x: Vec<f64>, cfg: &CliConfig) -> Result<(), Failure> {
    if x.len() <= INLINE_X_LIMIT {
        report.x = Some(x);
        return Ok(());
    }
    let path = sidecar_path(cfg);
    let file = File::create(&path).map_err(|e| Failure::at(&path, Error::Io(e)))?;
    write_vector(&x, std::io::BufWriter::new(file)).map_err(|e| Failure::at(&path, e))?;
    report.x_file = Some(path.display().to_string());
    Ok(())
}

fn reference_check(prob: &TrustRegionProblem, value: Option<f64>) -> Result<ReferenceCheck, Failure> {
    if prob.n() > MAX_DIM {
        return Ok(ReferenceCheck {
            value: None,
            gap: None,
            skipped: Some(format!("dimension {} exceeds {MAX_DIM}", prob.n())),
        });
    }
    let exact = solve_dense_exact(&DenseProblem::from_problem(prob)?, REFERENCE_TOL)?;
    Ok(ReferenceCheck {
        value: Some(exact.value),
        gap: value.map(|v| exact.value - v),
        skipped: None,
    })
}

/// Runs the configured solve. Returns the report and the exit code.
fn execute(cfg: &CliConfig) -> Result<(Report, i32), Failure> {
    let prob = load_problem(cfg)?;
    let mut rng = RngState::from_seed(cfg.seed);
    let solver = Solver::new(&prob);
    let (status, code) = match cfg.mode {
        Mode::Maximize => ("maximized", 0),
        Mode::Feasibility => ("found_vector", 0),
        Mode::Reference => ("reference", 0),
    };
    let mut report = Report::new(status, cfg.mode, cfg.eps, cfg.delta, cfg.seed);
    report.n = Some(prob.n());
    let mut code = code;

    match cfg.mode {
        Mode::Maximize => {
            let res = solver.maximize(cfg.eps, cfg.delta, &mut rng)?;
            report.value = Some(res.value);
            report.oracle_calls = res.telemetry.oracle_calls;
            report.matvecs = res.telemetry.matvecs;
            report.outer_iterations = Some(res.telemetry.outer_iterations);
            report.upper_bound = res.estimates.map(|_| res.upper_bound);
            report.estimates = res.estimates.map(|e| Estimates {
                lambda_hat: e.lambda_hat,
                mu_hat: e.mu_hat,
                kappa_hat: e.kappa_hat,
            });
            attach_x(&mut report, res.x, cfg)?;
        }
        Mode::Feasibility => {
            let c = cfg.c.expect("validated");
            let half = cfg.delta / 2.0;
            let est = solver.estimate_conditioning(half, &mut rng)?;
            if c > est.kappa_hat {
                // Above the a priori bound on the optimum.
                report.status = "infeasible_at_level";
                code = 2;
            } else {
                let rep = solver.feasibility_with(&est, c, cfg.eps, half, &mut rng)?;
                match rep.outcome {
                    FeasibilityOutcome::FoundVector(x) => {
                        report.value = Some(prob.objective(&x));
                        attach_x(&mut report, x, cfg)?;
                    }
                    FeasibilityOutcome::InfeasibleAtLevel(_) => {
                        report.status = "infeasible_at_level";
                        code = 2;
                    }
                }
            }
            report.level = Some(c);
            report.oracle_calls = solver.telemetry().oracle_calls();
            report.matvecs = solver.telemetry().matvecs();
            report.estimates = Some(Estimates {
                lambda_hat: est.lambda_hat,
                mu_hat: est.mu_hat,
                kappa_hat: est.kappa_hat,
            });
        }
        Mode::Reference => {
            if prob.n() > MAX_DIM {
                return Err(Failure::from(Error::InvalidArgument(format!(
                    "reference mode supports n <= {MAX_DIM}, got {}",
                    prob.n()
                ))));
            }
            let exact = solve_dense_exact(&DenseProblem::from_problem(&prob)?, REFERENCE_TOL)?;
            report.value = Some(exact.value);
            attach_x(&mut report, exact.x, cfg)?;
        }
    }

    if cfg.reference && cfg.mode != Mode::Reference {
        report.reference = Some(reference_check(&prob, report.value)?);
    }
    Ok((report, code))
}

fn emit<W: Write>(report: &Report, output: Option<&Path>, stdout: &mut W) -> std::io::Result<()> {
    let mut text = serde_json::to_string(report).map_err(std::io::Error::other)?;
    text.push('\n');
    match output {
        Some(path) => std::fs::write(path, text),
        None => stdout.write_all(text.as_bytes()),
    }
}

/// Parses `args` (including the program name), runs the solve and writes
/// the JSON result to `--output` or `stdout`. Returns the process exit code.
pub fn run_cli<I, T, W>(args: I, stdout: &mut W) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    W: Write,
{
    let start = Instant::now();
    let args = match CliArgs::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let failure = Failure::usage(e.to_string().trim_end().to_string());
            let report = Report::error(&failure, Mode::Maximize, 0.0, 0.0, 0);
            let _ = emit(&report, None, stdout);
            return failure.exit_code;
        }
    };
    let (mode, eps, delta, seed) = (args.mode, args.epsilon, args.delta, args.seed);
    let output = args.output.clone();

    let (mut report, code) = match CliConfig::from_args(args).and_then(|cfg| execute(&cfg)) {
        Ok(done) => done,
        Err(failure) => (Report::error(&failure, mode, eps, delta, seed), failure.exit_code),
    };
    report.wall_time_ms = start.elapsed().as_millis() as u64;
    if let Err(e) = emit(&report, output.as_deref(), stdout) {
        eprintln!("trsolve: failed to write result: {e}");
        return 1;
    }
    code
}
