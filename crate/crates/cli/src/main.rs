//! `wqpt`: run process reconstructions from a JSON config.

mod commands;
mod config;
mod output;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Axis;

#[derive(Parser)]
#[command(name = "wqpt", version, about = "Quantum process reconstruction from weak pointer measurements")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one reconstruction and write report.json / report.csv.
    Reconstruct {
        #[arg(long)]
        config: PathBuf,
        /// Exit with status 3 when any entry is undetermined.
        #[arg(long)]
        strict: bool,
    },
    /// Repeat a reconstruction over couplings (g = λ) or shot counts.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated values, e.g. `8e-3,4e-3,2e-3`.
        #[arg(long, value_delimiter = ',', required = true)]
        points: Vec<f64>,
    },
    /// Rotate every basis ket by `delta` and record the χ error.
    ErrorAccum {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 25)]
        trials: usize,
        #[arg(long, value_delimiter = ',', default_value = "2,4")]
        dims: Vec<usize>,
    },
    /// List channels, bases, pointers and schemes.
    Channels {
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Reconstruct { config, strict } => commands::reconstruct(&config, strict),
        Cmd::Sweep { config, axis, points } => commands::sweep(&config, axis, &points),
        Cmd::ErrorAccum { config, delta, trials, dims } => {
            commands::error_accum(&config, delta, trials, &dims)
        }
        Cmd::Channels { json } => commands::channels(json),
    };
    match res {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
