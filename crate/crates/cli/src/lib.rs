//! The `oum` command-line driver.
//!
//! Every subcommand writes its outputs into `--out DIR` (default `out`):
//!
//! | command       | files                                                   |
//! |---------------|---------------------------------------------------------|
//! | `solve`       | `field.csv`, `field.pgm` (grids), `acceptance.csv`, `manifest.json` |
//! | `image`       | as `solve`, over a PGM raster                           |
//! | `convergence` | `convergence.csv`, `manifest.json`                      |
//! | `oracle`      | solve files plus `oracle.csv`                           |
//! | `trajectory`  | solve files plus `trajectory.csv`                       |
//! | `residual`    | solve files plus `residual.csv`                         |
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.

use std::ffi::OsString;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;

pub use commands::CliError;
pub use config::{MeshSource, RunArgs, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "oum", version, about = "Ordered upwind solver for exit-time optimal control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve on one mesh and write the value field.
    Solve(RunArgs),
    /// Error table over a sequence of unit-square grids.
    Convergence(RunArgs),
    /// Compare the solver with a dense shortest-path graph.
    Oracle(RunArgs),
    /// Extract an approximately optimal path from --from X Y.
    Trajectory(RunArgs),
    /// Per-triangle residual of the discrete equation.
    Residual(RunArgs),
    /// Arrival map over a grayscale image.
    Image(RunArgs),
}

impl Command {
    fn parts(&self) -> (&'static str, &RunArgs) {
        match self {
            Command::Solve(a) => ("solve", a),
            Command::Convergence(a) => ("convergence", a),
            Command::Oracle(a) => ("oracle", a),
            Command::Trajectory(a) => ("trajectory", a),
            Command::Residual(a) => ("residual", a),
            Command::Image(a) => ("image", a),
        }
    }
}

fn dispatch(cmd: &Command) -> Result<(), CliError> {
    let (name, args) = cmd.parts();
    let cfg = RunConfig::resolve(name, args).map_err(CliError::Config)?;
    match cmd {
        Command::Solve(_) => commands::cmd_solve(&cfg),
        Command::Convergence(_) => commands::cmd_convergence(&cfg),
        Command::Oracle(_) => commands::cmd_oracle(&cfg),
        Command::Trajectory(_) => commands::cmd_trajectory(&cfg),
        Command::Residual(_) => commands::cmd_residual(&cfg),
        Command::Image(_) => commands::cmd_image(&cfg),
    }
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
