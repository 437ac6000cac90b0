//! Command-line front end. `run` parses arguments, dispatches to the library
//! and maps failures onto exit codes: 2 for invalid input, 3 for exhausted
//! budgets or caps, 4 for an undecided classification under `--strict`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{debug, info};
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::encoder::{
    dof_report, export_ideal, integer_grid, solve_system, verify_encoding, EncodingSystem,
    KappaMode, SolveOutcome, SolverConfig, Unknowns, DEFAULT_MAX_ITERATIONS, DEFAULT_STARTS,
    VERIFY_TOL,
};
use crate::error::Error;
use crate::jsr::{
    block_reduce, build_qaoa_vocabulary, jsr_bounds, Classification, JsrReport,
    MatrixVocabulary, DEFAULT_MARGIN, DEFAULT_PRODUCT_CAP,
};
use crate::sospoly::{ude_d28, IntPolynomial, SosPolynomial, UdeParameters, DEFAULT_BIT_BUDGET, UDE_VARIABLES};
use crate::vqasim::{
    bk_landscape, digitized_decision_with_cap, landscape_csv, linspace, vqa_norm_objective,
    vqa_objective, vqa_state, BkInstance, QaoaInstance, VqaInstance, DEFAULT_ENUMERATION_CAP,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_UNDECIDED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "diovqa", version, about = "VQA encodings, simulators, Diophantine evaluation and JSR bounds")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// Exit with status 4 when a classification is undecided.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Validate inputs and print the work plan without computing.
    #[arg(long, global = true)]
    pub dry_run: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a VQA instance at given angles.
    Simulate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        phi: Vec<f64>,
    },
    /// Exhaustive digitized decision: is some φ ∈ 𝔻^L at or below the threshold?
    Decide {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        threshold: f64,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: u64,
    },
    /// Closed-form against simulated energies of the mixer/cost construction, as CSV.
    QaoaLandscape {
        #[arg(long)]
        input: PathBuf,
        /// lo:hi:count
        #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
        beta: Option<(f64, f64, usize)>,
        /// lo:hi:count (default 0 to π/τ, 50 points)
        #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
        gamma: Option<(f64, f64, usize)>,
    },
    /// Build the coefficient-matching system for a target polynomial.
    Encode {
        #[arg(long)]
        input: PathBuf,
        /// Circuit dimension.
        #[arg(long)]
        n: usize,
        /// Anchor angles for the Vandermonde coefficients.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        anchor: Option<Vec<f64>>,
        /// Treat the Vandermonde coefficients as unknowns.
        #[arg(long)]
        free_kappa: bool,
    },
    /// Multistart least-squares search on an encoding system.
    Solve {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_STARTS)]
        starts: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
        max_iterations: usize,
    },
    /// Compare a solution's simulated objective with the target on an integer grid.
    Verify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long, default_value_t = 2)]
        radius: i64,
    },
    /// Real degrees of freedom of state, observable and generators.
    Dof {
        #[arg(long = "L")]
        layers: u64,
        #[arg(long)]
        n: u64,
    },
    /// Joint spectral radius bounds and convergence classification.
    Jsr {
        /// Vocabulary JSON, or a QAOA instance when --betas/--gammas are given.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 12)]
        depth: usize,
        #[arg(long, default_value_t = DEFAULT_MARGIN)]
        margin: f64,
        #[arg(long, default_value_t = DEFAULT_PRODUCT_CAP)]
        cap: u64,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        betas: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        gammas: Option<Vec<f64>>,
        /// Replace the vocabulary by its two-matrix block reduction.
        #[arg(long)]
        reduce: bool,
    },
    /// Evaluate the 28-variable universal equation at an integer point.
    UdeEval {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BIT_BUDGET)]
        bit_budget: u64,
        /// Replace the tower exponent 5^60 by this value.
        #[arg(long)]
        exponent_cap: Option<u64>,
    },
    /// Emit the matching equations as plain-text polynomials.
    ExportIdeal {
        #[arg(long)]
        input: PathBuf,
    },
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected lo:hi:count, got {s:?}"));
    }
    let lo = parts[0].parse::<f64>().map_err(|e| e.to_string())?;
    let hi = parts[1].parse::<f64>().map_err(|e| e.to_string())?;
    let n = parts[2].parse::<usize>().map_err(|e| e.to_string())?;
    Ok((lo, hi, n))
}

/// Failure with the file it concerns, if any.
#[derive(Debug)]
pub struct CliError {
    pub context: Option<PathBuf>,
    pub error: Error,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self.error {
            Error::BudgetExceeded { .. }
            | Error::EnumerationCapExceeded { .. }
            | Error::BudgetExhausted { .. }
            | Error::CapExceeded { .. } => EXIT_BUDGET,
            _ => EXIT_VALIDATION,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.context {
            Some(p) => write!(f, "{}: {}", p.display(), self.error),
            None => write!(f, "{}", self.error),
        }
    }
}

impl From<Error> for CliError {
    fn from(error: Error) -> Self {
        Self { context: None, error }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let ctx = |error: Error| CliError {
        context: Some(path.to_path_buf()),
        error,
    };
    let text = fs::read_to_string(path).map_err(|e| ctx(e.into()))?;
    serde_json::from_str(&text).map_err(|e| ctx(e.into()))
}

fn to_json<T: Serialize>(v: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(Error::from)?;
    s.push('\n');
    Ok(s)
}

/// What a subcommand produced: the artifact text and the exit status.
struct Outcome {
    text: String,
    status: i32,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Self { text, status: EXIT_OK }
    }
}

/// Target polynomial file: an SOS `{"num_vars", "summands"}` or an
/// expanded `{"num_vars", "terms"}`.
fn read_target(path: &Path) -> CliResult<IntPolynomial> {
    let value: serde_json::Value = read_json(path)?;
    let parsed = if value.get("summands").is_some() {
        serde_json::from_value::<SosPolynomial>(value).map(|s| s.expand())
    } else {
        serde_json::from_value::<IntPolynomial>(value)
    };
    parsed.map_err(|e| CliError {
        context: Some(path.to_path_buf()),
        error: e.into(),
    })
}

/// Solution file: a solver outcome (has an `"outcome"` key) or bare unknowns.
fn read_solution(path: &Path) -> CliResult<Unknowns> {
    let value: serde_json::Value = read_json(path)?;
    let parsed = if value.get("outcome").is_some() {
        serde_json::from_value::<SolveOutcome>(value).map(|o| o.point().unknowns.clone())
    } else {
        serde_json::from_value::<Unknowns>(value)
    };
    parsed.map_err(|e| CliError {
        context: Some(path.to_path_buf()),
        error: e.into(),
    })
}

#[derive(Deserialize)]
struct UdeFile {
    #[serde(default)]
    parameters: UdeParameters,
    /// Decimal strings in variable order.
    point: Vec<String>,
}

#[derive(Serialize)]
struct UdeValue {
    value: String,
    zero: bool,
}

#[derive(Serialize)]
struct SimulateReport {
    objective: f64,
    norm_objective: f64,
    state: crate::matcore::StateVector,
}

fn dispatch(cli: &Cli) -> CliResult<Outcome> {
    let c = &cli.common;
    match &cli.command {
        Command::Simulate { input, phi } => {
            let inst: VqaInstance = read_json(input)?;
            if c.dry_run {
                return Ok(Outcome::ok(format!(
                    "plan: simulate n={} L={} at {} angles\n",
                    inst.dim(),
                    inst.layers(),
                    phi.len()
                )));
            }
            let state = crate::matcore::StateVector::normalized(vqa_state(&inst, phi)?)?;
            let report = SimulateReport {
                objective: vqa_objective(&inst, phi)?,
                norm_objective: vqa_norm_objective(&inst, phi)?,
                state,
            };
            Ok(Outcome::ok(to_json(&report)?))
        }
        Command::Decide {
            input,
            threshold,
            cap,
        } => {
            let inst: VqaInstance = read_json(input)?;
            let digits = inst.digit_set().map_or(0, <[f64]>::len);
            if c.dry_run {
                return Ok(Outcome::ok(format!(
                    "plan: decide over {}^{} digit tuples at threshold {}\n",
                    digits,
                    inst.layers(),
                    threshold
                )));
            }
            let d = digitized_decision_with_cap(&inst, *threshold, *cap)?;
            Ok(Outcome::ok(to_json(&d)?))
        }
        Command::QaoaLandscape { input, beta, gamma } => {
            let inst: BkInstance = read_json(input)?;
            let (blo, bhi, bn) = beta.unwrap_or((0.0, std::f64::consts::PI, 50));
            let (glo, ghi, gn) =
                gamma.unwrap_or((0.0, std::f64::consts::PI / inst.tau(), 50));
            if c.dry_run {
                return Ok(Outcome::ok(format!(
                    "plan: landscape d={} on a {}x{} grid\n",
                    inst.d(),
                    bn,
                    gn
                )));
            }
            let rows = bk_landscape(&inst, &linspace(blo, bhi, bn), &linspace(glo, ghi, gn))?;
            Ok(Outcome::ok(landscape_csv(&rows)))
        }
        Command::Encode {
            input,
            n,
            anchor,
            free_kappa,
        } => {
            let target = read_target(input)?;
            let mode = if *free_kappa {
                KappaMode::Free
            } else {
                KappaMode::Anchored
            };
            let sys = EncodingSystem::from_polynomial(&target, *n, mode, anchor.clone())?;
            if c.dry_run {
                return Ok(Outcome::ok(format!(
                    "plan: encode L={} n={} -> {} equations in {} unknowns\n",
                    sys.num_vars(),
                    n,
                    sys.num_equations(),
                    sys.num_unknowns()
                )));
            }
            info!(
                "{} equations, {} unknowns",
                sys.num_equations(),
                sys.num_unknowns()
            );
            Ok(Outcome::ok(to_json(&sys)?))
        }
        Command::Solve {
            input,
            starts,
            max_iterations,
        } => {
            let sys: EncodingSystem = read_json(input)?;
            let mut cfg = SolverConfig {
                starts: *starts,
                max_iterations: *max_iterations,
                seed: c.seed,
                ..Default::default()
            };
            if let Some(t) = c.tolerance {
                cfg.tolerance = t;
            }
            if c.dry_run {
                return Ok(Outcome::ok(format!(
                    "plan: solve {} equations in {} unknowns with {} starts, seed {}\n",
                    sys.num_equations(),
                    sys.num_unknowns(),
                    cfg.starts,
                    cfg.seed
                )));
            }
            let out = solve_system(&sys, &cfg)?;
            debug!("solver outcome residual {:e}", out.point().residual);
            Ok(Outcome::ok(to_json(&out)?))
        }
        Command::Verify {
            input,
            solution,
            radius,
        } => {
            let sys: EncodingSystem = read_json(input)?;
            let unknowns = read_solution(solution)?;
            let grid = integer_grid(sys.num_vars(), -radius, *radius);
            if c.dry_run {
                return Ok(Outcome::ok(format!("plan: verify on {} grid points\n", grid.len())));
            }
            let mut report = verify_encoding(&sys, &unknowns, &grid)?;
            if let Some(t) = c.tolerance {
                report.tolerance = t;
                report.passed = report.max_deviation <= t;
            } else {
                report.tolerance = VERIFY_TOL;
            }
            Ok(Outcome::ok(to_json(&report)?))
        }
        Command::Dof { layers, n } => {
            let report = dof_report(*layers, *n)?;
            if c.dry_run {
                return Ok(Outcome::ok(format!("plan: dof table for L={layers} n={n}\n")));
            }
            if c.output.is_some() {
                return Ok(Outcome::ok(to_json(&report)?));
            }
            let mut text = String::new();
            for r in &report.rows {
                text.push_str(&format!("{}\t{}\t{}\n", r.object, r.space, r.dof));
            }
            Ok(Outcome::ok(text))
        }
        Command::Jsr {
            input,
            depth,
            margin,
            cap,
            betas,
            gammas,
            reduce,
        } => {
            let mut vocab = match (betas, gammas) {
                (Some(b), Some(g)) => {
                    let inst: QaoaInstance = read_json(input)?;
                    build_qaoa_vocabulary(&inst, b, g)?
                }
                (None, None) => read_json::<MatrixVocabulary>(input)?,
                _ => {
                    return Err(Error::invalid("--betas and --gammas must be given together").into())
                }
            };
            if *reduce {
                vocab = block_reduce(&vocab);
            }
            if c.dry_run {
                return Ok(Outcome::ok(format!(
                    "plan: jsr bounds for {} matrices of dimension {} to depth {}\n",
                    vocab.len(),
                    vocab.dim(),
                    depth
                )));
            }
            let bounds = jsr_bounds(&vocab, *depth, *cap)?;
            info!("explored {} products", bounds.products);
            let report = JsrReport::new(&bounds, *margin);
            let status = if c.strict && report.classification == Classification::Undecided {
                EXIT_UNDECIDED
            } else {
                EXIT_OK
            };
            Ok(Outcome {
                text: to_json(&report)?,
                status,
            })
        }
        Command::UdeEval {
            input,
            bit_budget,
            exponent_cap,
        } => {
            let file: UdeFile = read_json(input)?;
            if file.point.len() != UDE_VARIABLES.len() {
                return Err(CliError {
                    context: Some(input.clone()),
                    error: Error::DimensionMismatch {
                        expected: UDE_VARIABLES.len(),
                        actual: file.point.len(),
                    },
                });
            }
            let point = file
                .point
                .iter()
                .map(|s| {
                    s.parse::<BigInt>()
                        .map_err(|e| Error::Parse(format!("{s:?}: {e}")))
                })
                .collect::<crate::Result<Vec<_>>>()
                .map_err(|error| CliError {
                    context: Some(input.clone()),
                    error,
                })?;
            if c.dry_run {
                return Ok(Outcome::ok(format!(
                    "plan: evaluate 18 clauses in 28 variables with a {bit_budget}-bit budget\n"
                )));
            }
            let ude = ude_d28(&file.parameters, exponent_cap.map(Into::into));
            let value = ude.evaluate(&point, *bit_budget)?;
            Ok(Outcome::ok(to_json(&UdeValue {
                zero: value == BigInt::from(0),
                value: value.to_string(),
            })?))
        }
        Command::ExportIdeal { input } => {
            let sys: EncodingSystem = read_json(input)?;
            if c.dry_run {
                return Ok(Outcome::ok(format!(
                    "plan: export {} polynomial equations\n",
                    sys.num_equations()
                )));
            }
            Ok(Outcome::ok(export_ideal(&sys)))
        }
    }
}

fn init_logging() -> std::result::Result<(), String> {
    let level = std::env::var("DIOVQA_LOG").unwrap_or_else(|_| "error".into());
    if !["error", "info", "debug"].contains(&level.as_str()) {
        return Err(format!("DIOVQA_LOG must be error, info or debug, got {level:?}"));
    }
    // a second initialization in the same process is harmless
    let _ = env_logger::Builder::new()
        .parse_filters(&level)
        .format_timestamp(None)
        .try_init();
    Ok(())
}

/// Runs the command line and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Err(msg) = init_logging() {
        eprintln!("error: {msg}");
        return EXIT_VALIDATION;
    }
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.common.threads.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_VALIDATION;
        }
    };
    let result = pool.install(|| dispatch(&cli));
    match result {
        Ok(out) => {
            let written = match (&cli.common.output, cli.common.dry_run) {
                (Some(path), false) => fs::write(path, &out.text).map_err(|e| CliError {
                    context: Some(path.clone()),
                    error: e.into(),
                }),
                _ => match std::io::stdout().write_all(out.text.as_bytes()) {
                    // reader went away (e.g. piped into head)
                    Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                    r => r.map_err(|e| CliError::from(Error::from(e))),
                },
            };
            match written {
                Ok(()) => out.status,
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
