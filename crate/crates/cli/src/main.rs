#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod error;
mod ingest;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::CliError;

/// Worker threads for slice-parallel synthesis.
const THREADS_ENV: &str = "SCALESPACE_THREADS";

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV}={raw:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn run(cli: &Cli) -> Result<commands::Status, CliError> {
    if cli.seed.is_some() {
        return Err(CliError::Config("--seed is not accepted: the pipeline has no randomness".into()));
    }
    configure_threads()?;
    match &cli.command {
        Command::Kernel(c) => commands::kernel(c),
        Command::Field(c) => commands::field(c),
        Command::Contours(c) => commands::contours(c),
        Command::Tree(c) => commands::tree(c),
        Command::Scan(c) => commands::scan_cmd(c),
        Command::Invariants(c) => commands::invariants(c),
        Command::Compare(c) => commands::compare(c),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(status) => ExitCode::from(status as u8),
        Err(e) => {
            eprintln!("scalespace: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
