//! `scpw`: threshold, equilibria, sweeps, sensitivity grids and network
//! simulation for the super compact pairwise SIS model.

mod commands;
mod source;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use scpw_core::ScpwError;
use serde_json::json;

use commands::*;

#[derive(Debug, Parser)]
#[command(name = "scpw", version, about = "Super compact pairwise SIS model toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Epidemic threshold, bifurcation coefficients and DFE eigenvalues (JSON).
    Threshold(ThresholdArgs),
    /// Integrate the four-equation dynamics (CSV).
    Simulate(SimulateArgs),
    /// Endemic equilibrium by a registered method (JSON).
    Equilibrium(EquilibriumArgs),
    /// Prevalence against δ: ODE limit, polynomial root, both expansions (CSV).
    Bifurcation(BifurcationArgs),
    /// Moment sensitivity heatmaps, one CSV per regime and ⟨k³⟩ slice.
    Sensitivity(SensitivityArgs),
    /// One Gillespie SIS run on a configuration-model network (JSON).
    Netsim(NetsimArgs),
    /// Ensemble of network runs compared with the model prevalence (JSON).
    Validate(ValidateArgs),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Threshold(a) => threshold(a),
        Command::Simulate(a) => simulate(a),
        Command::Equilibrium(a) => equilibrium(a),
        Command::Bifurcation(a) => bifurcation(a),
        Command::Sensitivity(a) => sensitivity(a),
        Command::Netsim(a) => netsim(a),
        Command::Validate(a) => validate(a),
    }
}

/// 2 for bad input, 1 for numerical or I/O failure.
fn classify(err: &anyhow::Error) -> (u8, &'static str) {
    match err.chain().find_map(|e| e.downcast_ref::<ScpwError>()) {
        Some(e) if e.is_input_error() => (2, e.kind()),
        Some(e) => (1, e.kind()),
        None => (1, "io"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SCPW_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", json!({"error": "usage", "message": e.to_string().trim_end()}));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, kind) = classify(&e);
            eprintln!("{}", json!({"error": kind, "message": format!("{e:#}")}));
            ExitCode::from(code)
        }
    }
}
