//! Library side of the `mlgibbs` command-line tool: configuration parsing,
//! subcommand implementations and the exit-code contract.

pub mod commands;
pub mod config;
pub mod diag;
pub mod error;

pub use config::{ExperimentConfig, Method};
pub use error::CliError;

/// Environment variable overriding the configured seed.
pub const SEED_ENV: &str = "MLGIBBS_SEED";

/// Seed from `MLGIBBS_SEED` if set.
pub fn seed_override() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Config(format!("{SEED_ENV}={v:?} is not an unsigned 64-bit integer"))),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Config(format!("{SEED_ENV}: {e}"))),
    }
}
