//! `dicke3`: spectra, population maps, fidelity phase diagrams, separatrices,
//! store/retrieve reports, rotation checks and time evolution for the
//! three-level Dicke model, written as CSV.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{InvalidInput, RunConfig};

#[derive(Parser)]
#[command(name = "dicke3", version, about = "Exact diagonalization of the three-level Dicke model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON run configuration; flags override its fields
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    flags: RunConfig,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues of H or of a rotated Hamiltonian
    Spectrum(Common),
    /// Ground-state populations over a coupling grid, one file per frame
    Populations(Common),
    /// Fidelity minima along a pencil of rays
    PhaseDiagram(Common),
    /// Variational separatrix samples
    Separatrix(Common),
    /// Store and retrieve the ground-state qubit content
    StoreRetrieve(Common),
    /// Closed-form rotated generators against the matrix exponential
    RotateCheck(Common),
    /// Time evolution of a basis state, or the two-frame Rabi demonstration
    Evolve(Common),
}

const EXIT_INVALID: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<InvalidInput>().is_some() {
            return EXIT_INVALID;
        }
        if let Some(e) = cause.downcast_ref::<dicke3_core::Error>() {
            return if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_INVALID };
        }
    }
    1
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let (common, cmd): (&Common, fn(&RunConfig) -> anyhow::Result<()>) = match &cli.command {
        Command::Spectrum(c) => (c, commands::spectrum),
        Command::Populations(c) => (c, commands::populations_cmd),
        Command::PhaseDiagram(c) => (c, commands::phase_diagram_cmd),
        Command::Separatrix(c) => (c, commands::separatrix_cmd),
        Command::StoreRetrieve(c) => (c, commands::store_retrieve_cmd),
        Command::RotateCheck(c) => (c, commands::rotate_check_cmd),
        Command::Evolve(c) => (c, commands::evolve_cmd),
    };
    let rc = match &common.config {
        Some(path) => RunConfig::load(path)?.overlaid(&common.flags),
        None => common.flags.clone(),
    };
    if let Some(n) = rc.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| config::invalid(format!("cannot start {n} worker threads: {e}")))?;
    }
    cmd(&rc)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
