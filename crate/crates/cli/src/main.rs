#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod artifacts;
mod commands;
mod config;
mod error;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// Environment variable naming the default output root.
const OUT_ENV: &str = "LEVY_PASSAGE_OUT";

#[derive(Debug, Parser)]
#[command(
    name = "levy-passage",
    version,
    about = "Passage times of Lévy processes over power-law boundaries"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the config seed (changes the artifact hash).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses all cores. Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Output directory. Falls back to the config's `out`, then $LEVY_PASSAGE_OUT, then ./results.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Relative-stability class of the model.
    Classify(Common),
    /// Norming functions B(t) and C(r) on the r grid.
    Norming(Common),
    /// Passage-time sweep over the r grid.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Also write the first N simulated paths as CSV.
        #[arg(long, value_name = "N")]
        dump_paths: Option<usize>,
    },
    /// Deviation fractions per r with a convergence verdict.
    Converge(Common),
    /// Fraction of paths with equal one- and two-sided passage times.
    Equality(Common),
    /// Overshoot ratio summaries.
    Overshoot(Common),
    /// Truncated passage-time moments.
    Moments(Common),
    /// Closed-form and brute-force oracle values.
    Oracle(Common),
    /// Collate the artifacts in the output directory.
    Report(Common),
}

fn load(common: &Common) -> Result<Option<ExperimentConfig>, CliError> {
    let Some(path) = &common.config else {
        return Ok(None);
    };
    let src = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.clone(),
        source,
    })?;
    Ok(Some(ExperimentConfig::parse(&src, common.seed)?))
}

fn require(cfg: Option<ExperimentConfig>) -> Result<ExperimentConfig, CliError> {
    cfg.ok_or_else(|| CliError::Usage("this subcommand needs --config <path>".into()))
}

fn out_dir(common: &Common, cfg: Option<&ExperimentConfig>) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| cfg.and_then(|c| c.raw.out.clone()))
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| Path::new("results").to_path_buf())
}

fn run(cli: Cli) -> Result<(), CliError> {
    use commands::*;
    let (common, dump) = match &cli.command {
        Command::Simulate { common, dump_paths } => (common, *dump_paths),
        Command::Classify(c)
        | Command::Norming(c)
        | Command::Converge(c)
        | Command::Equality(c)
        | Command::Overshoot(c)
        | Command::Moments(c)
        | Command::Oracle(c)
        | Command::Report(c) => (c, None),
    };
    let cfg = load(common)?;
    let out = out_dir(common, cfg.as_ref());
    let w = common.workers;
    match cli.command {
        Command::Classify(_) => classify_cmd(&require(cfg)?, &out),
        Command::Norming(_) => norming_cmd(&require(cfg)?, &out),
        Command::Simulate { .. } => simulate_cmd(&require(cfg)?, &out, w, dump),
        Command::Converge(_) => converge_cmd(&require(cfg)?, &out, w),
        Command::Equality(_) => equality_cmd(&require(cfg)?, &out, w),
        Command::Overshoot(_) => overshoot_cmd(&require(cfg)?, &out, w),
        Command::Moments(_) => moments_cmd(&require(cfg)?, &out, w),
        Command::Oracle(_) => oracle_cmd(cfg.as_ref(), &out),
        Command::Report(_) => report::report_cmd(&out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
