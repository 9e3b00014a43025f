//! Experiment harness: configuration, oracles, acceptance checks and CSV output.

pub mod config;
pub mod criteria;
mod manifest;
pub mod oracle;
mod output;
mod run;

pub use config::{seed_expand, ExperimentConfig, ExperimentKind};
pub use manifest::{hash_hex, CheckRecord, RunManifest};
pub use output::{emit_csv, format_f64, Table};
pub use run::{check_names, error_exit_code, run_config, run_file, RunOptions, RunOutcome, OUT_ENV};
