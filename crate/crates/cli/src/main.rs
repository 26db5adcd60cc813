//! Command-line front end for the `priceopt` library.
//!
//! Exit codes: 0 success, 1 usage, 2 invalid data, 3 capacity guard,
//! 4 numeric failure. `SOLVER_SEED` sets the default seed.

mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "priceopt", version, about = "Price optimization with a cap on changed prices and a minimum change size")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic instance.
    Gen(commands::GenArgs),
    /// Run the multi-start gradient projection solver.
    Solve(commands::SolveCmd),
    /// Exhaustive global optimum for small instances.
    Oracle(commands::OracleArgs),
    /// Project a price vector onto the feasible set.
    Project(commands::ProjectArgs),
    /// Adjusted objective gap between two solutions.
    Compare(commands::CompareArgs),
    /// Export the mixed-integer model in LP file format.
    ExportMip(commands::ExportArgs),
    /// Re-solve for a list of change budgets.
    Sweep(commands::SweepArgs),
    /// Generate and solve the experiment grid.
    Suite(commands::SuiteArgs),
}

/// Seed shared by every command that draws random numbers.
#[derive(Args, Clone, Copy)]
pub struct SeedArg {
    /// Random seed.
    #[arg(long, env = "SOLVER_SEED", default_value_t = 0)]
    pub seed: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Solve(a) => commands::solve(a),
        Command::Oracle(a) => commands::oracle(a),
        Command::Project(a) => commands::project(a),
        Command::Compare(a) => commands::compare(a),
        Command::ExportMip(a) => commands::export_mip(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Suite(a) => commands::suite(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
