//! `lp-limitlaw`: analyse linear programs with random right-hand sides,
//! sample their limit laws and run Monte-Carlo checks.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lp_limitlaw::{Error, TieBreak, Tolerances};

#[derive(Debug, Parser)]
#[command(name = "lp-limitlaw", version, about = "Limit laws of empirical optimal solutions to linear programs")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Directory receiving all output files.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Random seed; overrides the seed of a Monte-Carlo config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true, env = "LP_LIMITLAW_THREADS")]
    pub threads: Option<usize>,
    /// Tolerance override `key=value`, e.g. `feas_tol=1e-8`. Repeatable.
    #[arg(long = "tol", global = true, value_name = "KEY=VALUE")]
    pub tol: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    OneSample,
    TwoSample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Policy {
    MinIndex,
    UniformRandom,
}

impl From<Policy> for TieBreak {
    fn from(p: Policy) -> Self {
        match p {
            Policy::MinIndex => TieBreak::MinIndex,
            Policy::UniformRandom => TieBreak::UniformRandomOverFeasible,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SamplingArgs {
    #[arg(long, value_enum, default_value = "one-sample")]
    pub mode: Mode,
    /// Limiting ratio `m / (n + m)` for two samples.
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Bases, assumptions, support partition and cones; writes analysis.json.
    Analyze { problem: PathBuf },
    /// Draws from the limit law of an OT problem; writes limit_samples.csv and limit_samples.json.
    LimitSample {
        problem: PathBuf,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, value_enum, default_value = "min-index")]
        policy: Policy,
    },
    /// Resampling experiment; writes fluctuations.csv, hausdorff.csv and report.json.
    MonteCarlo {
        problem: PathBuf,
        config: Option<PathBuf>,
        #[command(flatten)]
        sampling: SamplingArgs,
        /// Limit-law draws per comparison; overrides the config.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Uniqueness and nondegeneracy certificates; writes certificates.json.
    Certify {
        problem: PathBuf,
        /// Longest family scanned by the cycle certificates (default: N).
        #[arg(long)]
        max_cycle_len: Option<usize>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Lib(Error),
    Input(String),
    Output(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Output(_) => 1,
            CliError::Lib(e) => match e {
                Error::EnumerationCapExceeded { .. } | Error::CapExceeded(_) => 3,
                Error::NotUnique { .. }
                | Error::NoFeasibleCone
                | Error::NoDualFeasibleBasis
                | Error::Infeasible
                | Error::Unbounded => 4,
                Error::TooManyInfeasible { .. } | Error::EmptySet | Error::NonConvergence { .. } => 5,
                _ => 2,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Lib(e) => e.to_string(),
            CliError::Input(m) | CliError::Output(m) => m.clone(),
        }
    }
}

fn tolerances(overrides: &[String]) -> Result<Tolerances, CliError> {
    let mut tol = Tolerances::default();
    for item in overrides {
        let (key, value) =
            item.split_once('=').ok_or_else(|| CliError::Input(format!("--tol expects KEY=VALUE, got `{item}`")))?;
        tol.set(key.trim(), value.trim())?;
    }
    Ok(tol)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Input(format!("cannot start {threads} threads: {e}")))?;
    }
    let ctx = commands::Context {
        out_dir: cli.global.out_dir.clone(),
        seed: cli.global.seed,
        tol: tolerances(&cli.global.tol)?,
    };
    match cli.command {
        Command::Analyze { problem } => commands::analyze(&ctx, &problem),
        Command::LimitSample { problem, sampling, samples, policy } => {
            commands::limit_sample(&ctx, &problem, &sampling, samples, policy.into())
        }
        Command::MonteCarlo { problem, config, sampling, samples } => {
            commands::monte_carlo(&ctx, &problem, config.as_deref(), &sampling, samples)
        }
        Command::Certify { problem, max_cycle_len } => commands::certify(&ctx, &problem, max_cycle_len),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
