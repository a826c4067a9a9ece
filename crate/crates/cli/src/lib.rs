//! Command-line front end for the `magnon-echo` library: configuration,
//! figure presets, scenario dispatch and CSV output.

pub mod config;
pub mod output;
pub mod presets;
pub mod run;

pub use config::{CliError, CurveConfig, RunConfig, Scenario};
pub use run::{run_scenario, Block};

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "MAGNON_ECHO_THREADS";

/// Sizes the global worker pool from [`THREADS_ENV`], if set.
pub fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Runtime(format!("worker pool: {e}")))
}
