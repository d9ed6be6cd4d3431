//! `bpre` — scenario-driven experiments on supercritical branching
//! processes in i.i.d. random environments.
//!
//! Exit codes: 0 success, 2 config/validation failure, 3 resource refusal.

mod commands;
mod config;
mod output;

use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use bpre_core::simulator::RunLimits;
use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use commands::RunContext;
use config::ScenarioConfig;
use output::{write_json, RunRecord};

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Resource(String),
    Internal(String),
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "{m}"),
            CliError::Resource(m) => write!(f, "{m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
            CliError::Io(e) => write!(f, "io: {e}"),
        }
    }
}

impl From<bpre_core::Error> for CliError {
    fn from(e: bpre_core::Error) -> Self {
        match e {
            bpre_core::Error::ResourceLimit(m) => CliError::Resource(m),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

#[derive(Parser)]
#[command(
    name = "bpre",
    version,
    about = "Simulate branching processes in random environments and check their normal approximation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dump one trajectory per horizon as k,log_z,s,log_w CSV.
    Simulate(CommonArgs),
    /// Print the environment's exact moments and condition report as JSON.
    Moments {
        #[command(flatten)]
        common: CommonArgs,
        /// Moment order for the offspring conditions (> 1).
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// Exponential-moment order for the walk increment (> 0).
        #[arg(long, default_value_t = 1.0)]
        lambda0: f64,
    },
    /// Wasserstein distance to the normal per horizon, with bootstrap
    /// bands and a log-log rate fit.
    WassersteinRate {
        #[command(flatten)]
        common: CommonArgs,
        /// Replace measured distances with n^(-1/2) (fit-path test hook).
        #[arg(long, hide = true)]
        synthetic_dw: bool,
    },
    /// Weighted CDF-deviation profile per horizon.
    BeProfile(CommonArgs),
    /// Interval coverage for the criticality parameter and the population.
    CiCoverage(CommonArgs),
    /// Empirical tail frequencies against sub-exponential bounds.
    TailCheck(CommonArgs),
    /// Exact enumeration versus simulation at horizons <= 3.
    OracleCheck {
        #[command(flatten)]
        common: CommonArgs,
        /// Population support cap for the exact enumeration.
        #[arg(long, default_value_t = 200)]
        z_cap: usize,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario config file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; outputs are byte-identical for any value.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory (overrides the config's output_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Lift the horizon/replicate resource caps.
    #[arg(long)]
    force: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common): (&str, &CommonArgs) = match &cli.command {
        Command::Simulate(c) => ("simulate", c),
        Command::Moments { common, .. } => ("moments", common),
        Command::WassersteinRate { common, .. } => ("wasserstein-rate", common),
        Command::BeProfile(c) => ("be-profile", c),
        Command::CiCoverage(c) => ("ci-coverage", c),
        Command::TailCheck(c) => ("tail-check", c),
        Command::OracleCheck { common, .. } => ("oracle-check", common),
    };
    match run(&cli.command, name, common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bpre {name}: {e}");
            match e {
                CliError::Validation(_) => ExitCode::from(2),
                CliError::Resource(_) => ExitCode::from(3),
                CliError::Internal(_) | CliError::Io(_) => ExitCode::from(1),
            }
        }
    }
}

fn run(command: &Command, name: &str, common: &CommonArgs) -> Result<(), CliError> {
    let ctx = build_context(common)?;
    let body = || -> Result<Vec<String>, CliError> {
        match command {
            Command::Simulate(_) => commands::simulate(&ctx),
            Command::Moments { p, lambda0, .. } => commands::moments(&ctx, *p, *lambda0),
            Command::WassersteinRate { synthetic_dw, .. } => {
                commands::wasserstein_rate(&ctx, *synthetic_dw)
            }
            Command::BeProfile(_) => commands::be_profile(&ctx),
            Command::CiCoverage(_) => commands::ci_coverage(&ctx),
            Command::TailCheck(_) => commands::tail_check(&ctx),
            Command::OracleCheck { z_cap, .. } => commands::oracle_check(&ctx, *z_cap),
        }
    };
    let outputs = match common.threads {
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| CliError::Validation(format!("--threads: {e}")))?;
            pool.install(body)?
        }
        None => body()?,
    };
    write_json(
        &ctx.out_dir.join("run.json"),
        &RunRecord {
            command: name,
            master_seed: ctx.master_seed,
            config_sha256: &ctx.config_sha256,
            outputs,
        },
    )?;
    Ok(())
}

fn build_context(common: &CommonArgs) -> Result<RunContext, CliError> {
    let bytes = fs::read(&common.config).map_err(|e| {
        CliError::Validation(format!("cannot read {}: {e}", common.config.display()))
    })?;
    let digest = Sha256::digest(&bytes);
    let config_sha256 = digest.iter().fold(String::new(), |mut acc, b| {
        use fmt::Write as _;
        let _ = write!(acc, "{b:02x}");
        acc
    });
    let text = String::from_utf8(bytes)
        .map_err(|_| CliError::Validation("config is not valid UTF-8".into()))?;
    let config = ScenarioConfig::parse(&text)?;
    let master_seed = common.seed.unwrap_or(config.master_seed);
    let out_dir = common
        .out
        .clone()
        .or_else(|| config.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&out_dir)?;
    let limits = if common.force {
        RunLimits::unlimited()
    } else {
        RunLimits::default()
    };
    Ok(RunContext {
        config,
        master_seed,
        config_sha256,
        out_dir,
        limits,
    })
}
