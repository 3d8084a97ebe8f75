use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use odebayes::io::RunConfig;
use odebayes_cli::{cmd_fit, cmd_loo, cmd_predict, cmd_simulate, CliError};

#[derive(Parser)]
#[command(name = "odebayes", version, about = "Bayesian inference for ODE models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true, default_value = "odebayes.toml")]
    config: PathBuf,
    /// Overrides the sampler and simulation seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a dataset from the configured model.
    Simulate,
    /// Sample the posterior and write draws, summaries and log-likelihoods.
    Fit,
    /// Posterior predictive bands from a previous fit.
    Predict,
    /// PSIS-LOO for one run directory, or a comparison of two.
    Loo {
        /// Run directories; defaults to the output directory.
        runs: Vec<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<String, CliError> {
    let mut cfg = RunConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.sampler.seed = seed;
    }
    if let Some(out) = cli.out {
        // command-line paths are relative to the working directory
        cfg.output.dir = std::path::absolute(&out).unwrap_or(out);
    }
    let outcome = match cli.command {
        Command::Simulate => cmd_simulate(&cfg)?,
        Command::Fit => cmd_fit(&cfg)?,
        Command::Predict => cmd_predict(&cfg)?,
        Command::Loo { runs } => {
            let runs = if runs.is_empty() { vec![cfg.out_dir()] } else { runs };
            cmd_loo(&cfg, &runs)?
        }
    };
    Ok(outcome.stdout)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
