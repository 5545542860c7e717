use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;

use commands::{Exit, Invocation};
use config::ModeName;

/// Three-player quantum-game key distribution simulator.
#[derive(Parser)]
#[command(name = "qgame", version)]
struct Args {
    /// Scenario file (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Overrides the scenario's mode.
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,
    /// Overrides the scenario's shot count.
    #[arg(long, global = true)]
    shots: Option<u64>,
    /// Write outputs here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Mode {
    Exact,
    Sampled,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the payoff table and check that recovery is possible.
    Validate,
    /// Closed-form payoffs against the density-matrix oracle.
    Payoffs,
    /// Run a key-distribution session and write session.json.
    Session,
    /// Sweep the tap strength and report detection per point.
    EveScan {
        /// start:stop:step
        #[arg(long, default_value = "0:1:0.1")]
        p_grid: String,
    },
    /// Regenerate the printed-form discrepancy ledger.
    Ledger,
}

fn run(args: Args) -> anyhow::Result<Exit> {
    let mut loaded = config::load(args.config.as_deref(), std::env::vars())?;
    if let Some(m) = args.mode {
        loaded.config.mode = match m {
            Mode::Exact => ModeName::Exact,
            Mode::Sampled => ModeName::Sampled,
        };
    }
    if let Some(n) = args.shots {
        loaded.config.shots = n;
    }
    let name = match &args.command {
        Command::Validate => "validate",
        Command::Payoffs => "payoffs",
        Command::Session => "session",
        Command::EveScan { .. } => "eve-scan",
        Command::Ledger => "ledger",
    };
    let inv = Invocation { command: name, loaded: &loaded, seed: args.seed, out: args.out.as_deref() };
    match &args.command {
        Command::Validate => commands::validate(&inv),
        Command::Payoffs => commands::payoffs(&inv),
        Command::Session => commands::session(&inv),
        Command::EveScan { p_grid } => commands::eve_scan(&inv, &commands::parse_grid(p_grid)?),
        Command::Ledger => commands::ledger(&inv),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(Exit::Invalid as u8)
        }
    }
}
