//! Library side of the `classo` command-line tool: CSV ingestion, argument
//! definitions and the three subcommands. The binary in `main.rs` only
//! parses arguments, sizes the thread pool and maps errors to exit codes.

pub mod args;
pub mod commands;
pub mod error;
pub mod output;
pub mod table;

pub use args::{Cli, Command};
pub use error::{CliError, Result};
pub use table::{read_csv, read_table, write_dataset, Dataset, RawTable, ResponseColumn};

/// Environment variable capping the worker threads.
pub const THREADS_VAR: &str = "CLASSO_THREADS";

/// Size the global rayon pool from [`THREADS_VAR`], if set.
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        CliError::usage(format!(
            "{THREADS_VAR} must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::usage(format!("cannot size thread pool: {e}")))
}

pub fn run(cli: &Cli) -> Result<()> {
    configure_threads()?;
    match &cli.command {
        Command::Fit(a) => commands::cmd_fit(a),
        Command::Infer(a) => commands::cmd_infer(a),
        Command::Simulate(a) => commands::cmd_simulate(a),
    }
}
