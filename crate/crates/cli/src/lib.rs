//! Batch runner: `asg-lab <command> --config <path> [--out <path>] [--seed <u64>]`.
//!
//! A run reads one JSON config, dispatches to `asg-core`, and writes a CSV
//! table plus a `<out>.meta.json` sidecar whose `config` entry reproduces
//! the run. Exit codes: 0 success, 1 runtime error, 2 invalid config,
//! 3 a declared check tolerance was missed.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod table;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Parser;

pub use commands::{run_command, Outcome};
pub use config::{Command, ExperimentConfig};
pub use error::CliError;
pub use table::ResultTable;

#[derive(Debug, Parser)]
#[command(
    name = "asg-lab",
    version,
    about = "Run ASG, line counting, logistic and OU experiments"
)]
pub struct Cli {
    /// One of: simulate-b, simulate-x, simulate-ou, simulate-asg, stationary,
    /// gen-gap, duality, drift-scan, fluct-test.
    #[arg(value_parser = clap::builder::PossibleValuesParser::new(config::COMMANDS))]
    pub command: String,
    /// JSON config file.
    #[arg(long)]
    pub config: PathBuf,
    /// CSV output path; the table goes to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed; overrides the config's `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn load_config(
    path: &Path,
    command: Option<&str>,
    seed: Option<u64>,
) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
    ExperimentConfig::from_json(&text, command, seed)
}

/// Runs `cfg` and writes its outputs. Tables are written even when a check
/// fails; the failure is then returned as [`CliError::CheckFailed`].
pub fn run(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Outcome, CliError> {
    let outcome = run_command(cfg)?;
    let echo = cfg.to_json();
    match out {
        Some(path) => {
            table::write_outputs(&outcome.table, path, &echo, cfg.seed)?;
            for (suffix, t) in &outcome.auxiliary {
                t.write_csv(std::fs::File::create(table::auxiliary_path(path, suffix))?)?;
            }
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            outcome.table.write_csv(&mut lock)?;
            lock.flush()?;
        }
    }
    if let Some(msg) = &outcome.failure {
        return Err(CliError::CheckFailed(msg.clone()));
    }
    Ok(outcome)
}

/// Parses arguments, runs, and maps the result to an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = load_config(&cli.config, Some(&cli.command), cli.seed)
        .and_then(|cfg| run(&cfg, cli.out.as_deref()));
    match result {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("asg-lab: {e}");
            e.exit_code()
        }
    }
}
