//! `htlab`: build and verify harmonic tree constructions from JSON configs,
//! emitting deterministic JSON/CSV reports with CI-friendly exit codes.
//!
//! Exit codes: 0 success, 1 verification failure, 2 I/O or config error,
//! 3 resource or depth exhaustion.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use htlab_core::Error;

#[derive(Parser)]
#[command(name = "htlab", version, about = "Exact harmonic-function constructions on weighted trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every structural invariant of the configured tree and space.
    Validate(RunArgs),
    /// Build a universality certificate: one dense target per stage.
    Universal(RunArgs),
    /// Run the 2-adic schedule and certify each hit.
    Frequent(RunArgs),
    /// Build a spanning family and verify combinations against targets.
    Genericity(RunArgs),
    /// Hold projections inside basis balls with upper-density evidence.
    X(RunArgs),
    /// Schedule arithmetic only: identities and density series.
    Schedule(ScheduleArgs),
}

#[derive(Parser)]
struct RunArgs {
    /// Path to the JSON run config.
    #[arg(long)]
    config: PathBuf,
    /// Directory for report files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// RNG seed for the Monte Carlo cross-checks (constructions are
    /// deterministic and seed-free).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Parser)]
struct ScheduleArgs {
    /// Largest index/level to scan.
    #[arg(long, default_value_t = 1 << 20)]
    horizon: u64,
    /// Directory for report files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

/// Failure carrying the process exit code.
pub struct CmdError {
    pub code: u8,
    pub message: String,
}

impl CmdError {
    fn io(message: impl Into<String>) -> Self {
        CmdError { code: 2, message: message.into() }
    }
}

impl From<Error> for CmdError {
    fn from(e: Error) -> Self {
        let code = match &e {
            // malformed input
            Error::Parse { .. } | Error::InvalidConfig(_) | Error::BadLevelSet(_) => 2,
            // resource and depth limits
            Error::VertexCap { .. }
            | Error::HorizonTooDeep { .. }
            | Error::SearchSpaceExceeded { .. }
            | Error::NoAdmissibleLevel(_)
            | Error::EnumerationExhausted { .. } => 3,
            // everything else is a semantic check that failed
            _ => 1,
        };
        CmdError { code, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate(args) => commands::validate(&args),
        Command::Universal(args) => commands::universal(&args),
        Command::Frequent(args) => commands::frequent(&args),
        Command::Genericity(args) => commands::genericity(&args),
        Command::X(args) => commands::upper_density(&args),
        Command::Schedule(args) => commands::schedule(&args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("htlab: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
