mod commands;
mod config;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Failure;
use crate::config::Overrides;

#[derive(Debug, Parser)]
#[command(name = "cmm", version, about = "Consistent-model-mining forecasts for seasonal series")]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the multiplicative decomposition as date,D,T,S,IC
    Decompose(commands::DecomposeArgs),
    /// Fit one atomic model and forecast past the training window
    Forecast(commands::ForecastArgs),
    /// Score experts on the training window and mine consistent models
    Mine(commands::MineArgs),
    /// Run the full pipeline on a series or a directory of series
    Evaluate(commands::EvaluateArgs),
    /// Pairwise normalised SFD matrix and similarity groups
    Sfd(commands::SfdArgs),
    /// Evaluate target series with a source series' consistent models
    Transfer(commands::TransferArgs),
    /// Generate a synthetic series from a JSON spec
    Synth(commands::SynthArgs),
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config = cli.overrides.resolve().map_err(Failure::Validation)?;
    if let Some(n) = cli.overrides.threads {
        if n == 0 {
            return Err(Failure::Validation(anyhow::anyhow!("--threads must be at least 1")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Runtime(e.into()))?;
    }
    let threads = cli.overrides.threads;
    match cli.command {
        Command::Decompose(a) => commands::decompose(a, config, threads),
        Command::Forecast(a) => commands::forecast(a, config, threads),
        Command::Mine(a) => commands::mine(a, config, threads),
        Command::Evaluate(a) => commands::evaluate(a, config, threads),
        Command::Sfd(a) => commands::sfd(a, config, threads),
        Command::Transfer(a) => commands::transfer(a, config, threads),
        Command::Synth(a) => commands::synth(a, config, threads, cli.overrides.seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
