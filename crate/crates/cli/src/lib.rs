//! Batch driver for the qalign simulations.
//!
//! [`config`] resolves command-line flags and an optional TOML file into a
//! validated [`config::RunConfig`]; [`run::dispatch`] executes it.

pub mod config;
pub mod run;

use std::path::PathBuf;

pub use config::{Command, ConfigError, Overrides, RunConfig};
pub use run::{dispatch, Outcome, RunError};

/// Environment variable naming the directory CSV files go to when no
/// `output` path is configured.
pub const OUT_DIR_ENV: &str = "QALIGN_OUT_DIR";

/// Exit statuses.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const VERIFICATION_FAILED: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const IO: i32 = 3;
}

/// Where the CSV goes: the configured path, else `$QALIGN_OUT_DIR/<command>.csv`,
/// else standard output (`None`).
pub fn csv_destination(cfg: &RunConfig, out_dir: Option<PathBuf>) -> Option<PathBuf> {
    cfg.output.clone().or_else(|| out_dir.map(|d| d.join(format!("{}.csv", cfg.command))))
}
