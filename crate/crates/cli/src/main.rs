mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ConfigError, RunConfig};

/// Collaborative GBDT intrusion-detection simulator.
#[derive(Parser)]
#[command(name = "fedforest", version)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the federated pipeline and report held-out metrics.
    Simulate,
    /// Train one GBDT on the pooled training data.
    Central,
    /// Remove a client from a saved model and retrain the server classifier.
    Unlearn {
        #[arg(long)]
        client: usize,
        #[arg(long)]
        model: PathBuf,
    },
    /// List the decision rules of a saved model.
    Rules {
        #[arg(long)]
        model: PathBuf,
    },
    /// Communication cost table for the configured scenario.
    Ledger,
}

fn load(cli: &Cli) -> anyhow::Result<RunConfig> {
    let path = cli.config.as_ref().ok_or_else(|| ConfigError("--config is required for this command".into()))?;
    Ok(RunConfig::load(path, cli.seed, cli.out.clone())?)
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Simulate => commands::simulate(&load(cli)?),
        Command::Central => commands::central(&load(cli)?),
        Command::Unlearn { client, model } => commands::unlearn(&load(cli)?, *client, model),
        Command::Rules { model } => commands::rules(model, cli.out.as_deref()),
        Command::Ledger => commands::ledger(&load(cli)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<ConfigError>().is_some() => {
            eprintln!("config error: {e:#}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
