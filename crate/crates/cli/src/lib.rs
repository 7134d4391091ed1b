//! Configuration loading, experiment orchestration, and data export for the
//! chain simulator. The binary in `main.rs` is a thin wrapper over this
//! crate so integration tests can drive runs in-process.

pub mod config;
pub mod output;
pub mod run;

pub use config::{load_config, parse_config, RunConfig};
pub use output::{RunManifest, sha256_hex};
pub use run::run;

use thiserror::Error;

/// Environment variable supplying the default worker count; the `--threads`
/// flag overrides it.
pub const THREADS_ENV: &str = "IONSIM_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    /// Process exit status: 2 for config problems, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 3,
        }
    }
}
