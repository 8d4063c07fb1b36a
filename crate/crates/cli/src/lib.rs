//! Config-driven experiment runner on top of `absorption-core`.
//!
//! Each scenario writes long-format CSV tables and a `manifest.json` that
//! echoes the config, lists the tolerances and records every check.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod scenarios;

use std::path::PathBuf;

pub use config::{ExperimentConfig, FamilyKind, GrowthKind, Scenario};
pub use output::{emit_csv, emit_manifest, read_csv, Check, RunManifest};
pub use scenarios::{run, MANIFEST_NAME};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "ABSORPTION_LAB_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] absorption_core::Error),
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
}

impl CliError {
    /// 2 for config errors, 3 for everything that goes wrong while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Io { .. } => 3,
        }
    }
}

/// Exit status of a finished run.
pub fn exit_code(manifest: &RunManifest) -> i32 {
    if manifest.passed {
        0
    } else {
        3
    }
}
