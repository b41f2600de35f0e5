//! `bilinear`: run steering pipelines from a TOML config.
//!
//! Exit codes: 0 success, 1 i/o failure, 2 config or contract error,
//! 3 inadmissible data or hold violation, 4 exhausted time search.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod presets;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Context;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "bilinear",
    version,
    about = "Multiplicative-control steering of reaction-diffusion equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the admissibility of (y0, y^d) and print a JSON report.
    Check(RunArgs),
    /// Run a steering pipeline (mode set by `steer.mode`).
    Steer(RunArgs),
    /// Error-versus-T convergence study, optionally with a resolvent prefilter study.
    Sweep(RunArgs),
    /// Bernstein approximation of the reaction along the steered trajectory.
    Bernstein(RunArgs),
    /// Mollify a field on the grid.
    Mollify(RunArgs),
    /// Hold the target as an equilibrium and measure the drift.
    Hold(RunArgs),
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write trajectory CSVs and manifests.
    #[arg(long)]
    emit_trajectory: bool,
    /// Print nothing on success.
    #[arg(long)]
    quiet: bool,
}

type Handler = fn(&Context) -> Result<u8, CliError>;

fn run(command: Command) -> Result<u8, CliError> {
    let (args, handler): (RunArgs, Handler) = match command {
        Command::Check(a) => (a, commands::check),
        Command::Steer(a) => (a, commands::steer),
        Command::Sweep(a) => (a, commands::sweep),
        Command::Bernstein(a) => (a, commands::bernstein),
        Command::Mollify(a) => (a, commands::mollify_cmd),
        Command::Hold(a) => (a, commands::hold),
    };
    let loaded = config::load(&args.config)?;
    let out = match (args.out, &loaded.config.output.dir) {
        (Some(dir), _) => dir,
        (None, Some(dir)) => loaded.base.join(dir),
        (None, None) => PathBuf::from("bilinear-out"),
    };
    let emit_trajectory =
        args.emit_trajectory || loaded.config.output.emit_trajectory.unwrap_or(false);
    let ctx = Context {
        loaded,
        out,
        emit_trajectory,
        quiet: args.quiet,
    };
    handler(&ctx)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
