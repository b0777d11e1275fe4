//! `gridnwa <command> --config <path> [--seed N] [--out DIR]`
//!
//! Exit codes: 0 success, 2 validation, 3 solver failure, 4 non-convergence.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, ValueEnum};
use gridnwa_core::CoreError;

use crate::commands::Ctx;
use crate::config::LoadedConfig;
use crate::output::{sha256_hex, RunDir};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Fit,
    Matrix,
    Optimize,
    Value,
    Simulate,
    Scale,
    Report,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Self::Fit => "fit",
            Self::Matrix => "matrix",
            Self::Optimize => "optimize",
            Self::Value => "value",
            Self::Simulate => "simulate",
            Self::Scale => "scale",
            Self::Report => "report",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "gridnwa", version, about = "Storage as a non-wires alternative in distribution planning")]
struct Cli {
    command: Command,
    #[arg(long)]
    config: PathBuf,
    /// Overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let loaded = LoadedConfig::load(&cli.config)?;
    let seed = cli.seed.or(loaded.config.seed);
    let out_dir = match (&cli.out, &loaded.config.out) {
        (Some(d), _) => d.clone(),
        (None, Some(d)) => loaded.resolve(d),
        (None, None) => PathBuf::from("gridnwa-out"),
    };
    let mut ctx = Ctx {
        loaded: &loaded,
        seed,
        out: RunDir::create(&out_dir)?,
    };
    match cli.command {
        Command::Fit => commands::fit(&mut ctx)?,
        Command::Matrix => commands::matrix(&mut ctx)?,
        Command::Optimize => commands::optimize(&mut ctx)?,
        Command::Value => commands::value(&mut ctx)?,
        Command::Simulate => commands::simulate(&mut ctx)?,
        Command::Scale => commands::scale(&mut ctx)?,
        Command::Report => commands::report(&mut ctx)?,
    }
    ctx.out.finish(cli.command.name(), &sha256_hex(loaded.text.as_bytes()), seed)
}

/// Exit code and error kind; errors outside the core library are input
/// problems.
fn classify(err: &anyhow::Error) -> (u8, &'static str) {
    match err.chain().find_map(|e| e.downcast_ref::<CoreError>()) {
        Some(CoreError::NonConvergence { .. }) => (4, "non_convergence"),
        Some(
            CoreError::Solver(_)
            | CoreError::Infeasible(_)
            | CoreError::Unbounded(_)
            | CoreError::Uncertified(_)
            | CoreError::NoSignChange { .. },
        ) => (3, "solver"),
        _ => (2, "validation"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            let (code, kind) = classify(&err);
            let record = serde_json::json!({
                "error": { "kind": kind, "exit_code": code, "message": format!("{err:#}") }
            });
            eprintln!("{record}");
            ExitCode::from(code)
        }
    }
}
