use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nsch_cli::{parse_config, run, thread_count, Command, RunConfig, RunError};
use nsch_core::control::Check;

/// Navier-Stokes-Cahn-Hilliard membrane solver with adjoint-based control.
#[derive(Parser)]
#[command(name = "nsch", version)]
struct Args {
    /// Configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for verification directions, overriding `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Forward run driven by the configured control.
    Simulate,
    /// Projected-gradient minimization of the tracking cost.
    Optimize,
    /// Verification checks: mass, energy, frechet, duality, gradient (default: all).
    Verify { check: Option<String> },
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nsch: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(args: Args) -> Result<(), RunError> {
    let mut cfg = match &args.config {
        Some(p) => parse_config(p)?,
        None => RunConfig::default(),
    };
    if let Some(o) = args.out {
        cfg.out_dir = o;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.threads = thread_count(cfg.threads)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build_global()
        .map_err(|e| RunError::Config(format!("cannot start {} worker threads: {e}", cfg.threads)))?;
    let cmd = match args.cmd {
        Cmd::Simulate => Command::Simulate,
        Cmd::Optimize => Command::Optimize,
        Cmd::Verify { check: None } => Command::Verify(None),
        Cmd::Verify { check: Some(c) } => {
            Command::Verify(Some(Check::parse(&c).map_err(|e| RunError::Config(e.to_string()))?))
        }
    };
    let outcome = run(cmd, &cfg)?;
    for line in &outcome.summary {
        println!("{line}");
    }
    for a in &outcome.artifacts {
        println!("wrote {}", a.display());
    }
    Ok(())
}
