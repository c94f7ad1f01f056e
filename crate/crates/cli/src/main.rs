mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::Config;
use crate::error::CliError;
use crate::output::Artifacts;

/// Hamiltonian lattice gauge theory with finite gauge groups.
#[derive(Parser)]
#[command(name = "fgauge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML run configuration.
    #[arg(short, long)]
    config: PathBuf,
    /// Output directory, overriding `[output] dir`.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Group and irrep summary.
    Group {
        #[command(subcommand)]
        action: GroupAction,
    },
    /// Electric levels f(j) as CSV.
    Electric(Common),
    /// Gauge-invariant Hilbert space dimension.
    Physdim(Common),
    /// Spin-network basis, written to the basis cache.
    Basis {
        #[command(subcommand)]
        action: BuildAction,
    },
    /// Sparse Hamiltonian at `[hamiltonian] lambda`.
    Hamiltonian {
        #[command(subcommand)]
        action: BuildAction,
    },
    /// Ground-state observables over the λ grid.
    Sweep(Common),
    /// Brute-force cross-check on a small lattice.
    Oracle {
        #[command(subcommand)]
        action: CheckAction,
    },
}

#[derive(Subcommand)]
enum GroupAction {
    Info(Common),
}

#[derive(Subcommand)]
enum BuildAction {
    Build(Common),
}

#[derive(Subcommand)]
enum CheckAction {
    Check(Common),
}

type Handler = fn(&Config, &mut Artifacts) -> Result<(), CliError>;

fn run(common: &Common, handler: Handler) -> Result<(), CliError> {
    let config = Config::load(&common.config)?;
    let mut out = Artifacts::new(config.output_dir(common.out.as_deref()))?;
    match handler(&config, &mut out) {
        Ok(()) => Ok(()),
        Err(e @ CliError::CheckFailed(_)) => Err(e),
        Err(e) => {
            out.rollback();
            Err(e)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, handler): (&Common, Handler) = match &cli.command {
        Command::Group { action: GroupAction::Info(c) } => (c, commands::group_info),
        Command::Electric(c) => (c, commands::electric),
        Command::Physdim(c) => (c, commands::physdim),
        Command::Basis { action: BuildAction::Build(c) } => (c, commands::basis_build),
        Command::Hamiltonian { action: BuildAction::Build(c) } => (c, commands::hamiltonian_build),
        Command::Sweep(c) => (c, commands::run_sweep),
        Command::Oracle { action: CheckAction::Check(c) } => (c, commands::oracle_check),
    };
    match run(common, handler) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
