//! Pipeline driver. Exit codes: 0 success, 1 usage or configuration error,
//! 2 runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use proxyforge_cli::commands;
use proxyforge_cli::config::{Overrides, PipelineConfig};
use proxyforge_cli::error::CliError;

#[derive(Parser)]
#[command(
    name = "proxyforge",
    about = "Discover optimization algorithms for expensive black-box problems",
    version
)]
struct Cli {
    /// TOML configuration file; flags below override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for the whole pipeline.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Target problem registry name.
    #[arg(long, global = true)]
    problem: Option<String>,
    /// Search condition: proxy-driven, benchmark-driven, or real-world-direct.
    #[arg(long, global = true)]
    condition: Option<String>,
    /// Output root directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the target and build its landscape-feature distribution.
    Ela,
    /// Evolve proxy expressions toward the target's distribution.
    GenProxies,
    /// Search for algorithm configurations against the stand-in objectives.
    Discover,
    /// Evaluate the champions on the real target and audit consumption.
    Validate {
        /// Also run the reference baselines under the same budget.
        #[arg(long)]
        with_baselines: bool,
    },
    /// Run the reference baselines alone.
    Baseline,
    /// Aggregate every run directory into summary tables.
    Report,
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let overrides = Overrides {
        seed: cli.seed,
        problem: cli.problem,
        condition: cli.condition,
        out: cli.out,
    };
    let config = PipelineConfig::load(cli.config.as_deref(), &overrides)?;
    match cli.command {
        Command::Ela => commands::cmd_ela(&config),
        Command::GenProxies => commands::cmd_gen_proxies(&config),
        Command::Discover => commands::cmd_discover(&config),
        Command::Validate { with_baselines } => commands::cmd_validate(&config, with_baselines),
        Command::Baseline => commands::cmd_baseline(&config),
        Command::Report => commands::cmd_report(&config),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successes; anything else is a
            // usage error and exits 1 rather than clap's default 2.
            use clap::error::ErrorKind;
            let _ = err.print();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
