//! `spheremin`: energy minimization experiments on the sphere.
//!
//! Every subcommand prints one JSON document (or writes it to `--out`).
//! Exit codes: 0 success, 1 usage error, 2 domain error, 3 numerical failure.

mod commands;
mod json;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] spheremin_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if e.is_domain() => 2,
            CliError::Io(_) => 2,
            CliError::Core(_) | CliError::Numerical(_) => 3,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "spheremin", version, about = "Energy minimization of measures on the unit sphere")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Leave out the `meta` block (version, timestamp) for byte-stable output.
    #[arg(long, global = true)]
    no_meta: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Gegenbauer coefficients of a kernel.
    Expand(ExpandArgs),
    /// Positive-definiteness classification from the coefficient signs.
    Classify(ClassifyArgs),
    /// Energy of a configuration.
    Energy(ConfigKernelArgs),
    /// Potential extremes on the support and on a probe grid.
    Potential(PotentialArgs),
    /// Multi-start Riemannian gradient descent.
    Minimize(MinimizeArgs),
    /// Minimize (or load), then reduce the support to the dimension bound.
    Reduce(ReduceArgs),
    /// Non-positive-definiteness witness for `|t|^p`.
    Witness(WitnessArgs),
    /// Closed form versus finite differences for the iterated operators.
    VerifyDiffop(DiffopArgs),
    /// Design strength of a configuration.
    Designs(DesignsArgs),
}

#[derive(Debug, Args)]
pub struct ExpandArgs {
    /// Kernel literal: pframe:P, poly:c0,c1,..., causal:TAU, acute, table:FILE.
    #[arg(long)]
    pub kernel: String,
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value_t = 16)]
    pub nmax: usize,
    /// Initial quadrature size; defaults to max(64, 2 nmax + 16).
    #[arg(long)]
    pub mquad: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub expand: ExpandArgs,
    /// Threshold relative to the largest coefficient.
    #[arg(long, default_value_t = spheremin_core::spectral::DEFAULT_CLASSIFY_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct ConfigKernelArgs {
    /// `builtin:NAME`, a CSV file (x1..xd,weight) or a JSON file.
    #[arg(long)]
    pub config: String,
    #[arg(long)]
    pub kernel: String,
    #[arg(long)]
    pub d: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PotentialArgs {
    #[command(flatten)]
    pub base: ConfigKernelArgs,
    #[arg(long, default_value_t = 10_000)]
    pub grid: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct MinimizeArgs {
    #[arg(long)]
    pub kernel: String,
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value_t = 12)]
    pub atoms: usize,
    #[arg(long, default_value_t = 20)]
    pub starts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Gradient-norm stopping tolerance.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 5000)]
    pub max_iters: usize,
    /// Keep the weights equal.
    #[arg(long)]
    pub fixed_weights: bool,
    /// Skip the central symmetrization of results for even kernels.
    #[arg(long)]
    pub no_symmetrize: bool,
    /// CSV file for the per-iteration trace of every start.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    #[arg(long)]
    pub kernel: String,
    #[arg(long)]
    pub d: usize,
    /// Start from this configuration instead of minimizing.
    #[arg(long)]
    pub config: Option<String>,
    #[arg(long, default_value_t = 16)]
    pub nmax: usize,
    #[arg(long, default_value_t = 20)]
    pub atoms: usize,
    #[arg(long, default_value_t = 20)]
    pub starts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Moment tolerance of the reduction.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// CSV file for the G value after each reduction step.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WitnessArgs {
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    /// Starting eps; halved until the form is negative.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Scan `PMIN:PMAX:STEP` instead of a single p.
    #[arg(long)]
    pub scan: Option<String>,
    /// CSV file: the scan rows, or the eps schedule of a single run.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiffopArgs {
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    /// Comma-separated exponents; defaults to points of (2k-1, 2k) and (2k, 2k+1].
    #[arg(long, value_delimiter = ',')]
    pub p_grid: Option<Vec<f64>>,
    /// Comma-separated values of t in (0, 1]; defaults to 0.1, 0.2, ..., 1.
    #[arg(long, value_delimiter = ',')]
    pub t_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = spheremin_core::diffop::DEFAULT_H)]
    pub h: f64,
    /// CSV file for the verdict matrix.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DesignsArgs {
    #[arg(long)]
    pub config: String,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub nmax: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Expand(_) => "expand",
            Command::Classify(_) => "classify",
            Command::Energy(_) => "energy",
            Command::Potential(_) => "potential",
            Command::Minimize(_) => "minimize",
            Command::Reduce(_) => "reduce",
            Command::Witness(_) => "witness",
            Command::VerifyDiffop(_) => "verify-diffop",
            Command::Designs(_) => "designs",
        }
    }

    fn run(&self) -> CliResult<commands::Outcome> {
        match self {
            Command::Expand(a) => commands::expand(a),
            Command::Classify(a) => commands::classify(a),
            Command::Energy(a) => commands::energy(a),
            Command::Potential(a) => commands::potential(a),
            Command::Minimize(a) => commands::minimize(a),
            Command::Reduce(a) => commands::reduce(a),
            Command::Witness(a) => commands::witness(a),
            Command::VerifyDiffop(a) => commands::verify_diffop(a),
            Command::Designs(a) => commands::designs(a),
        }
    }
}

fn emit(cli: &Cli, mut report: Value) -> CliResult<()> {
    if !cli.no_meta {
        let unix_time = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        if let Value::Object(map) = &mut report {
            map.insert(
                "meta".into(),
                json!({"tool": "spheremin", "version": env!("CARGO_PKG_VERSION"), "command": cli.command.name(), "unix_time": unix_time}),
            );
        }
    }
    let text = json::to_string(&report);
    match &cli.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = cli.command.run().and_then(|outcome| {
        emit(&cli, outcome.report)?;
        outcome.failure.map_or(Ok(()), |msg| Err(CliError::Numerical(msg)))
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
