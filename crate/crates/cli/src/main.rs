use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;

use commands::Failure;

/// Repeated auctions with quantile-space learning bidders.
#[derive(Debug, Parser)]
#[command(name = "quantbid", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a game and write the rounds CSV and summary.
    Simulate {
        config: PathBuf,
        /// Directory for output files; overrides the directories in `[output]`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Independent replicas with seeds split from the master seed.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        replicas: u64,
    },
    /// Check the gradient/revenue identity on random instances.
    VerifyIdentity {
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 3)]
        max_n: usize,
        #[arg(long, default_value_t = 4)]
        max_k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Drive agile OGD through the three-phase swap-regret instance.
    SwapDemo {
        #[arg(long, default_value_t = 0.1)]
        eta: f64,
        #[arg(long, default_value_t = 100)]
        batches: u64,
    },
    /// Optimal expected revenue per round for the config's priors.
    Myerson { config: PathBuf },
    /// Check feasibility, IR, monotonicity and bid-0 conditions of every format a config can emit.
    ValidateFormat { config: PathBuf },
    /// Recompute totals (and, given the config, regrets) from a rounds CSV.
    RegretReport {
        rounds_csv: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate { config, out_dir, replicas } => commands::simulate(&config, out_dir.as_deref(), replicas),
        Command::VerifyIdentity { trials, max_n, max_k, seed } => commands::verify_identity(trials, max_n, max_k, seed),
        Command::SwapDemo { eta, batches } => commands::swap_demo(eta, batches),
        Command::Myerson { config } => commands::myerson(&config),
        Command::ValidateFormat { config } => commands::validate_format(&config),
        Command::RegretReport { rounds_csv, config } => commands::regret_report(&rounds_csv, config.as_deref()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Assertion(e)) => {
            eprintln!("assertion failed: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
