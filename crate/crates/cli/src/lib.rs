//! Command-line experiments for Glauber-Fock cavity arrays.
//!
//! Each subcommand is an [`experiments::Experiment`]; [`run`] resolves the
//! flags, executes it and writes the result.

pub mod args;
pub mod error;
pub mod experiments;
pub mod output;
pub mod request;

pub use error::{CliError, Result};

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "GF_SIM_THREADS";

pub fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::config(format!("{THREADS_ENV} must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::config(e.to_string()))
}

pub fn run(cli: &args::Cli) -> Result<()> {
    let request = request::resolve(cli)?;
    let output = experiments::execute(&request)?;
    output.write(cli.out.as_deref(), cli.format)
}
