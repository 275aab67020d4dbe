use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fracctrl_cli::{execute, exit, threads_from_env, Command, RunOptions};

/// Simulate, steer and optimize impulsive fractional-order control systems.
#[derive(Debug, Parser)]
#[command(name = "fracctrl", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Scenario file (JSON, `"schema": 1`).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Regularization parameter; for `sweep` the first value of the grid.
    #[arg(long)]
    lambda: Option<f64>,
    /// Grid cells per segment.
    #[arg(long)]
    nodes: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let threads = match threads_from_env() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let opts = RunOptions { lambda: args.lambda, nodes: args.nodes, threads };
    match execute(args.command, &args.scenario, &args.out, &opts) {
        Ok(out) => {
            for (name, _) in &out.files {
                println!("{}", args.out.join(name).display());
            }
            ExitCode::from(exit::OK)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
