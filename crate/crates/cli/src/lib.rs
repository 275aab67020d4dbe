//! Scenario files, subcommands and CSV/JSON output for the `fracctrl`
//! command line tool.

// `!(x > 0)` guards are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod error;
pub mod output;
pub mod run;
pub mod scenario;

pub use error::{exit, CliError};
pub use output::RunOutput;
pub use run::{run, Command, RunOptions};
pub use scenario::{load_scenario, parse_scenario, Scenario, ScenarioError};

pub const THREADS_ENV: &str = "FRACCTRL_THREADS";

/// Reads the sweep worker cap from `FRACCTRL_THREADS`.
pub fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => Err(CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {s:?}"))),
        },
    }
}

/// Loads, runs and writes; the directory is touched only on success.
pub fn execute(
    cmd: Command,
    scenario_path: &std::path::Path,
    out_dir: &std::path::Path,
    opts: &RunOptions,
) -> Result<RunOutput, CliError> {
    let scenario = load_scenario(scenario_path)?;
    let output = run(cmd, &scenario, opts)?;
    output.write_to(out_dir)?;
    Ok(output)
}
