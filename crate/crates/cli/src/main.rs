//! `spillover`: run the estimation pipelines from TOML configs.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::CliError;

#[derive(Parser)]
#[command(
    name = "spillover",
    version,
    about = "Monetary-policy spillover pipelines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pooled panel BVAR with recursive identification and IRF bands.
    SvarPanel(RunArgs),
    /// Single-country BVAR (six lags, Minnesota prior by default).
    SvarCountry(RunArgs),
    /// Firm-panel fixed-effects regressions, one table of columns.
    FirmReg(RunArgs),
    /// Local projections of cumulative capital growth over horizons.
    FirmLp(RunArgs),
    /// Entrepreneur-model sweeps over the interest rate, θ or initial debt.
    ModelSweep(RunArgs),
    /// Numerical checks of the rate and leverage-constraint propositions.
    VerifyProps(RunArgs),
    /// Write synthetic macro and firm fixtures.
    Simulate(RunArgs),
}

#[derive(Args, Clone, Debug)]
pub struct RunArgs {
    /// TOML config; every field has a default.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Output directory [default: config `out_dir`, then $SPILLOVER_OUT_DIR, then ./spillover-out].
    #[arg(short, long)]
    pub out_dir: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let result = match &cli.command {
        Command::SvarPanel(a) => commands::svar::run(a, false, started),
        Command::SvarCountry(a) => commands::svar::run(a, true, started),
        Command::FirmReg(a) => commands::firm::run(a, false, started),
        Command::FirmLp(a) => commands::firm::run(a, true, started),
        Command::ModelSweep(a) => commands::model::run_sweep(a, started),
        Command::VerifyProps(a) => commands::model::run_props(a, started),
        Command::Simulate(a) => commands::simulate::run(a, started),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

pub(crate) fn fail(class: &'static str, message: impl Into<String>) -> CliError {
    CliError::Failed {
        class,
        message: message.into(),
    }
}
