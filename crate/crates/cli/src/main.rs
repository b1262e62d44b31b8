//! `horocm` command-line front end.
//!
//! Exit codes: 0 pass, 1 error, 2 check failed, 3 solver failure.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "horocm", version, about = "Solver and verification toolkit for the horospherical p-Christoffel-Minkowski equation")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Grid resolution per polar angle (overrides the config).
    #[arg(long, global = true)]
    pub resolution: Option<usize>,
    /// Seed for randomized property checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    Obj,
    Csv,
    Conformal,
    All,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the admissibility conditions on f.
    CheckF,
    /// Solve by continuation from the constant solution.
    Solve,
    /// Re-certify a stored solution.
    Verify,
    /// Write mesh and per-node tables for a stored solution.
    Export {
        #[arg(long, value_enum, default_value_t = ExportFormat::All)]
        format: ExportFormat,
    },
    /// Print the constant solution and the C0 bounds for constant data.
    Constant {
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
    },
    /// Randomized identity checks on symmetric functions.
    Selftest {
        #[arg(long, default_value_t = 1000)]
        cases: usize,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::EXIT_ERROR)
        }
    }
}
