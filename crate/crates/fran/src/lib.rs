//! Sweeps, table output and the `fran` command line on top of `fran-core`.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod output;

pub use fran_core as core;

/// Environment variable capping the worker threads used by sweeps.
pub const THREADS_ENV: &str = "FRAN_THREADS";

/// Reads [`THREADS_ENV`]; `Ok(None)` when unset.
pub fn threads_from_env() -> Result<Option<usize>, String> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(format!("{THREADS_ENV} must be a positive integer, got {v:?}")),
        },
    }
}
