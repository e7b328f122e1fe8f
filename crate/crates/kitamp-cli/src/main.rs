//! `kitamp` — batch analysis frontend for KIT amplifier experiments.
//!
//! Subcommands: `gain` (simulate dispersion + gain profiles), `trl`
//! (solve the 8-term error model and de-embed a DUT), `noise` (fit system
//! noise temperature from a variable-temperature-load sweep), `readout`
//! (score single-shot records), and `gen-fixtures` (materialize the
//! synthetic datasets used by the test suite).
//!
//! Exit codes: 0 success, 1 computational failure, 2 input/validation
//! failure.

mod fixtures;
mod gain;
mod noise_cmd;
mod readout_cmd;
mod runctx;
mod trl;

use clap::{Parser, Subcommand};
use std::process::ExitCode;

pub(crate) use runctx::RunContext;

#[derive(Parser)]
#[command(name = "kitamp", version, about = "KIT amplifier analysis toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// key = value config file; omit to run on built-in defaults.
    #[arg(long)]
    config: Option<std::path::PathBuf>,
    /// Output directory (default: $KITAMP_OUT or the working directory).
    #[arg(long)]
    out: Option<std::path::PathBuf>,
    /// Override one config key, e.g. --set a_p=0. Repeatable; flags win
    /// over the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(clap::Args)]
struct NoiseArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// CSV of `freq_hz,loss_db` divided out of the measured PSD before
    /// fitting (referring the noise past those components).
    #[arg(long)]
    loss_table: Option<std::path::PathBuf>,
    /// Restrict result emission to one format (default: both).
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
}

#[derive(clap::Args)]
struct FixturesArgs {
    /// Output directory (default: $KITAMP_OUT or the working directory).
    #[arg(long)]
    out: Option<std::path::PathBuf>,
    /// Seed for every synthetic dataset.
    #[arg(long, default_value_t = 20260809)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate dispersion and the forward gain profile.
    Gain(CommonArgs),
    /// Solve TRL standards for the 8-term error model and de-embed a DUT.
    Trl(CommonArgs),
    /// Fit gain and system noise temperature from a load-temperature sweep.
    Noise(NoiseArgs),
    /// Score single-shot readout records into fidelity reports.
    Readout(CommonArgs),
    /// Write the synthetic oracle datasets (TRL, noise, readout, gain).
    GenFixtures(FixturesArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gain(args) => RunContext::new(&args).and_then(|ctx| gain::run(&ctx)),
        Command::Trl(args) => RunContext::new(&args).and_then(|ctx| trl::run(&ctx)),
        Command::Noise(args) => {
            RunContext::new(&args.common).and_then(|ctx| noise_cmd::run(&ctx, &args))
        }
        Command::Readout(args) => RunContext::new(&args).and_then(|ctx| readout_cmd::run(&ctx)),
        Command::GenFixtures(args) => fixtures::run(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.exit_code())
        }
    }
}
