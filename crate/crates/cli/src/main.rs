//! `outlier`: streaming outlier detection on CSV series, plus the synthetic
//! study grid used to exercise it.
//!
//! Settings come from built-in defaults, then an optional `key = value`
//! config file, then flags, later layers winning. `--dump-config` echoes the
//! resolved settings in the same format and exits.

mod calibrate;
mod config;
mod detect;
mod error;
mod io;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use outlier_core::detector::Variant;
use outlier_core::sim::{Distribution, MeanFn, Process};

use config::{BandwidthChoice, ConfigPatch, RunConfig, ScheduleKind, WeightList};
use error::{CliError, Result};

#[derive(Parser)]
#[command(name = "outlier", version, about = "Streaming outlier detection for non-stationary series")]
struct Cli {
    /// config file with one `key = value` per line, `#` comments
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// print the resolved configuration and exit
    #[arg(long, global = true)]
    dump_config: bool,
    /// calibration length (rows used to fit the threshold)
    #[arg(long, global = true)]
    n: Option<usize>,
    /// per-test level in (0, 1)
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// level schedule across blocks: constant or summable
    #[arg(long, global = true)]
    schedule: Option<ScheduleKind>,
    /// per-block weights for the summable schedule, e.g. 0.5,0.25
    #[arg(long, global = true)]
    weights: Option<WeightList>,
    /// full keeps flagged points in the window, partial leaves them out
    #[arg(long, global = true, value_parser = parse_variant)]
    variant: Option<Variant>,
    /// smoothing bandwidth: a number in (0, 1) or auto (cross validation)
    #[arg(long, global = true)]
    bandwidth: Option<BandwidthChoice>,
    /// number of calibration blocks for the tail fit
    #[arg(long, global = true)]
    block_count: Option<usize>,
    /// PRNG seed; required wherever randomness is involved
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// input CSV with a `value` column and an optional `index` column
    #[arg(long, global = true, value_name = "FILE")]
    input: Option<PathBuf>,
    /// output file (stdout when absent)
    #[arg(long, global = true, value_name = "FILE")]
    output: Option<PathBuf>,
    /// scenario mean function: mu0, mu1, mu2, mu3
    #[arg(long, global = true)]
    mean_fn: Option<MeanFn>,
    /// scenario error process: iid, ma, ar
    #[arg(long, global = true)]
    process: Option<Process>,
    /// scenario error distribution: normal, uniform, exp, pareto4, pareto2
    #[arg(long, global = true)]
    dist: Option<Distribution>,
    /// inject outliers into the monitored stretch of each scenario
    #[arg(long, global = true)]
    contaminated: bool,
    /// replications per scenario cell
    #[arg(long, global = true)]
    replications: Option<usize>,
    /// enumerate the whole study grid (4 means x 3 processes x 5
    /// distributions x 3 sizes, both variants)
    #[arg(long, global = true)]
    full_grid: bool,
    #[command(subcommand)]
    command: Option<Cmd>,
}

#[derive(Subcommand)]
enum Cmd {
    /// calibrate on the first n rows, then write one verdict row per
    /// remaining observation
    Detect,
    /// run scenario cells and write one metrics row per cell
    Simulate,
    /// calibrate on the first n rows and print the fit diagnostics
    Calibrate,
}

fn parse_variant(s: &str) -> std::result::Result<Variant, String> {
    match s {
        "full" => Ok(Variant::Full),
        "partial" => Ok(Variant::Partial),
        other => Err(format!("unknown variant '{other}', expected full or partial")),
    }
}

fn flag_patch(cli: &Cli) -> ConfigPatch {
    ConfigPatch {
        n: cli.n,
        alpha: cli.alpha,
        schedule: cli.schedule,
        weights: cli.weights.clone(),
        variant: cli.variant,
        bandwidth: cli.bandwidth,
        block_count: cli.block_count,
        seed: cli.seed,
        input: cli.input.clone(),
        output: cli.output.clone(),
        mean_fn: cli.mean_fn,
        process: cli.process,
        dist: cli.dist,
        contaminated: cli.contaminated,
        replications: cli.replications,
        full_grid: cli.full_grid,
    }
}

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => config::parse_file(path)?,
        None => ConfigPatch::default(),
    };
    let run = RunConfig::resolve(file, flag_patch(&cli))?;
    if cli.dump_config {
        print!("{}", run.dump());
        return Ok(());
    }
    match cli.command {
        Some(Cmd::Detect) => detect::run(&run),
        Some(Cmd::Simulate) => simulate::run(&run),
        Some(Cmd::Calibrate) => calibrate::run(&run),
        None => Err(CliError::Usage("missing command: detect, simulate, or calibrate".into())),
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
