//! `tailnorm` command-line front end.
//!
//! Exit codes: 0 success, 2 invalid input or configuration, 3 an
//! experiment ran but failed (failure ceiling, failed sweep cells), 1 I/O.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tailnorm::harness::{ExperimentConfig, RunOptions, SweepAxis};
use tailnorm::NormOrder;

use crate::config::{CheckRatesSection, CliConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Experiment(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn in_file(self, path: &Path) -> Self {
        match self {
            CliError::Validation(msg) => CliError::Validation(format!("{}: {msg}", path.display())),
            other => other,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Validation(_) => 2,
            CliError::Experiment(_) => 3,
        }
    }
}

impl From<tailnorm::Error> for CliError {
    fn from(e: tailnorm::Error) -> Self {
        match e {
            tailnorm::Error::FailureCeiling { .. } => CliError::Experiment(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "tailnorm",
    version,
    about = "Tail estimation for norms of discretized processes"
)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; JSON goes to stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the configured master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, env = "TAILNORM_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate product paths from the `[simulate]` section and write them as CSV.
    Simulate,
    /// Hill and Weissman estimates from a values CSV or a path CSV.
    Estimate(EstimateArgs),
    /// Run the `[experiment]` section.
    Experiment,
    /// Run the `[experiment]` section along one axis.
    Sweep(SweepArgs),
    /// Grid size needed for the discretization error to be negligible.
    CheckRates(CheckRatesArgs),
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// One observation per field, comma or newline separated.
    #[arg(long, conflicts_with = "paths", required_unless_present = "paths")]
    values: Option<PathBuf>,
    /// A path-matrix CSV; each row is reduced to its discrete norm.
    #[arg(long)]
    paths: Option<PathBuf>,
    /// Norm order p ≥ 1 or `inf`.
    #[arg(long, default_value = "inf")]
    norm_order: NormOrder,
    #[arg(long)]
    k: usize,
    /// Defaults to 1/n.
    #[arg(long)]
    tail_prob: Option<f64>,
    #[arg(long, default_value_t = 0.95)]
    ci_level: f64,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Overrides `[sweep] axis`.
    #[arg(long, value_parser = parse_axis)]
    axis: Option<SweepAxis>,
    /// Overrides `[sweep] values`.
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
struct CheckRatesArgs {
    #[arg(long)]
    n: Option<usize>,
    /// Exponent λ in k = ⌊n^λ⌋.
    #[arg(long = "lambda")]
    lambda_exp: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Usable Hölder exponent of the driver.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    eps_prime: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
}

fn parse_axis(s: &str) -> Result<SweepAxis, String> {
    serde_json::from_value(serde_json::Value::String(s.to_lowercase()))
        .map_err(|_| format!("unknown axis `{s}`; expected m, k or n"))
}

fn experiment_config(file: &CliConfig, seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let mut config = file
        .experiment
        .clone()
        .ok_or_else(|| CliError::Validation("config has no [experiment] section".into()))?;
    if let Some(seed) = seed {
        config.master_seed = seed;
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => config::load(path)?,
        None => CliConfig::default(),
    };
    let workers = cli.workers.or(file.workers);
    if workers == Some(0) {
        return Err(CliError::Validation("workers must be ≥ 1".into()));
    }
    let opts = RunOptions {
        workers,
        ..RunOptions::default()
    };
    let out = cli.out.clone().or_else(|| file.out.clone());
    let out = out.as_deref();

    match cli.command {
        Command::Simulate => {
            let mut section = file
                .simulate
                .clone()
                .ok_or_else(|| CliError::Validation("config has no [simulate] section".into()))?;
            if let Some(seed) = cli.seed {
                section.master_seed = seed;
            }
            let out = out.ok_or_else(|| CliError::Validation("simulate needs --out".into()))?;
            commands::simulate(&section, out, workers)
        }
        Command::Estimate(args) => {
            let input = match (&args.values, &args.paths) {
                (Some(v), None) => commands::EstimateInput::Values(v),
                (None, Some(p)) => commands::EstimateInput::Paths(p, args.norm_order),
                _ => {
                    return Err(CliError::Validation(
                        "give exactly one of --values, --paths".into(),
                    ))
                }
            };
            commands::estimate(input, args.k, args.tail_prob, args.ci_level, out)
        }
        Command::Experiment => {
            commands::experiment(&experiment_config(&file, cli.seed)?, opts, out)
        }
        Command::Sweep(args) => {
            let config = experiment_config(&file, cli.seed)?;
            let axis = args.axis.or(file.sweep.as_ref().map(|s| s.axis));
            let values = args
                .values
                .or(file.sweep.as_ref().map(|s| s.values.clone()));
            let (Some(axis), Some(values)) = (axis, values) else {
                return Err(CliError::Validation(
                    "sweep needs an axis and values".into(),
                ));
            };
            commands::sweep(&config, axis, &values, opts, out)
        }
        Command::CheckRates(a) => {
            let flags = CheckRatesSection {
                n: a.n,
                lambda_exp: a.lambda_exp,
                gamma: a.gamma,
                eta: a.eta,
                eps_prime: a.eps_prime,
                m: a.m,
            };
            let params = file.check_rates.clone().unwrap_or_default().merged(&flags);
            commands::check_rates(&params, out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
