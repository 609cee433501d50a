//! `parabolic-delay`: batch runs of delay-problem scenarios.
//!
//! Exit status: 0 all assertions pass, 1 solver or I/O failure, 2 config
//! error, 3 invariant violation, 4 an assertion failed.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::run::{Command, RunError};

#[derive(Parser, Debug)]
#[command(
    name = "parabolic-delay",
    version,
    about = "Mild-solution runs and checks for parabolic delay equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Scenario config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; defaults to the config's `output_dir`, then `out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for sweeps.
    #[arg(long, global = true, env = "PARABOLIC_DELAY_THREADS")]
    threads: Option<usize>,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Solve the scenario and write the trajectory.
    Solve,
    /// Cocycle, duality, ellipticity and kernel positivity checks.
    Verify,
    /// Fit the L1→L∞ smoothing exponent.
    Smoothing,
    /// Check the Grönwall bound along the solution.
    Gronwall,
    /// Initial-condition continuity ladder.
    ConvergeIc,
    /// Oscillating-coefficient convergence ladder.
    ConvergeCoeff,
    /// Delay convergence ladder.
    ConvergeDelay,
    /// Randomized scenario suite.
    Sweep,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Solve => Command::Solve,
            Cmd::Verify => Command::Verify,
            Cmd::Smoothing => Command::Smoothing,
            Cmd::Gronwall => Command::Gronwall,
            Cmd::ConvergeIc => Command::ConvergeIc,
            Cmd::ConvergeCoeff => Command::ConvergeCoeff,
            Cmd::ConvergeDelay => Command::ConvergeDelay,
            Cmd::Sweep => Command::Sweep,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = Command::from(cli.command);
    let Some(path) = cli.config else {
        eprintln!("error: --config is required");
        return ExitCode::from(2);
    };
    let mut cfg = match config::load(&path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli
        .out
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));

    match run::run(command, &cfg, &out, cli.threads) {
        Ok(outcome) => {
            let verdict = if outcome.passed { "pass" } else { "FAIL" };
            println!(
                "{} {}: {verdict} ({} files in {})",
                command.name(),
                cfg.id,
                outcome.files.len(),
                out.display()
            );
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(4)
            }
        }
        Err(RunError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(RunError::Invariant { tag, message }) => {
            eprintln!("invariant violated [{tag}]: {message}");
            ExitCode::from(3)
        }
        Err(RunError::Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
