//! `memvol`: batch front end for simulation, effective volatility and
//! pricing of short-memory processes.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use memvol::EffVolMethod;

use commands::{Engine, PathChoice};
use config::parse_config;
use error::CliError;

#[derive(Parser)]
#[command(
    name = "memvol",
    version,
    about = "Short-memory stochastic processes and option pricing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample paths as CSV `path_id,t,value`.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 10)]
        paths: usize,
        #[arg(long, value_enum, default_value_t = PathChoice::Short)]
        kind: PathChoice,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mean and variances at time `t` as JSON.
    Moments {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Effective volatility on the time grid as CSV `t,B`.
    Effvol {
        #[arg(long)]
        config: PathBuf,
        /// exact | asymptotic | gaussian; defaults to numerics.effvol_method.
        #[arg(long)]
        method: Option<EffVolMethod>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Option price as JSON.
    Price {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        engine: Engine,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Value surface CSV `t,S,V` (PDE engine only).
        #[arg(long)]
        surface: Option<PathBuf>,
    },
    /// Runs the invariant checks against the configured model.
    Verify {
        #[arg(long)]
        config: PathBuf,
    },
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("MEMVOL_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Usage(format!(
            "MEMVOL_THREADS must be a positive integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size the worker pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match cli.command {
        Command::Simulate {
            config,
            paths,
            kind,
            out,
        } => {
            let cfg = parse_config(&config)?;
            commands::simulate(&cfg, paths, kind, out)?;
        }
        Command::Moments { config, t, out } => {
            let cfg = parse_config(&config)?;
            commands::moments(&cfg, t, out)?;
        }
        Command::Effvol {
            config,
            method,
            out,
        } => {
            let cfg = parse_config(&config)?;
            commands::effvol(&cfg, method, out)?;
        }
        Command::Price {
            config,
            engine,
            out,
            surface,
        } => {
            let cfg = parse_config(&config)?;
            commands::price(&cfg, engine, out, surface)?;
        }
        Command::Verify { config } => {
            let cfg = parse_config(&config)?;
            verify::verify(&cfg)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
