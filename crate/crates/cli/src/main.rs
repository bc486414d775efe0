use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand as ClapSubcommand};
use viscoplast::cli::{dispatch, parse_config, RunConfig, Subcommand};

/// Compressible power-law and Bingham fluid laboratory.
#[derive(Parser)]
#[command(name = "viscoplast", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Solve the stationary problem and check the regularity estimates.
    Elliptic(Common),
    /// Time integration of the power-law system.
    Powerlaw(Common),
    /// delta-continuation toward the 1D Bingham limit.
    Bingham(Common),
    /// Run the property suite and print a pass/fail table.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration (defaults are used when omitted).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized checks.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    quiet: bool,
}

fn init_threads() {
    let Ok(v) = std::env::var("VISCOPLAST_THREADS") else {
        return;
    };
    match v.parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("could not size thread pool: {e}");
            }
        }
        _ => log::warn!("ignoring VISCOPLAST_THREADS={v}"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (sub, common) = match cli.command {
        Command::Elliptic(c) => (Subcommand::Elliptic, c),
        Command::Powerlaw(c) => (Subcommand::Powerlaw, c),
        Command::Bingham(c) => (Subcommand::Bingham, c),
        Command::Verify(c) => (Subcommand::Verify, c),
    };
    let level = if common.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    init_threads();

    let mut cfg = match &common.config {
        Some(path) => match parse_config(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error[{}]: {e}", e.class());
                return ExitCode::FAILURE;
            }
        },
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    let out = common
        .out
        .clone()
        .or_else(|| cfg.output.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("viscoplast-out"));

    match dispatch(sub, &cfg, &out) {
        Ok(outcome) => {
            if !common.quiet {
                let text = match &outcome.table {
                    Some(t) => t.clone(),
                    None => serde_json::to_string_pretty(&outcome.summary).unwrap_or_default() + "\n",
                };
                // a closed pipe is not an error worth reporting
                let _ = std::io::stdout().write_all(text.as_bytes());
            }
            match outcome.failure {
                None => ExitCode::SUCCESS,
                Some((class, msg)) => {
                    eprintln!("error[{class}]: {msg}");
                    ExitCode::FAILURE
                }
            }
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.class());
            ExitCode::FAILURE
        }
    }
}
