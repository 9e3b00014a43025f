use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ExperimentKind;
use crate::error::{Error, Result};

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl CheckRecord {
    /// A check that passes when `measured <= threshold`.
    pub fn at_most(name: impl Into<String>, measured: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed: measured <= threshold, measured, threshold, detail: detail.into() }
    }

    /// A check that passes when `measured >= threshold`.
    pub fn at_least(name: impl Into<String>, measured: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed: measured >= threshold, measured, threshold, detail: detail.into() }
    }
}

/// `manifest.json` of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// SHA-256 of the config file bytes, hex encoded.
    pub config_hash: String,
    pub version: String,
    pub kind: ExperimentKind,
    pub wall_clock_seconds: f64,
    pub checks: Vec<CheckRecord>,
    /// File names written next to the manifest.
    pub artifacts: Vec<String>,
}

impl RunManifest {
    pub fn new(config_bytes: &[u8], kind: ExperimentKind) -> Self {
        Self {
            config_hash: hash_hex(config_bytes),
            version: env!("CARGO_PKG_VERSION").to_string(),
            kind,
            wall_clock_seconds: 0.0,
            checks: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Adds a record; a name that is already present is an error.
    pub fn record(&mut self, check: CheckRecord) -> Result<()> {
        if self.checks.iter().any(|c| c.name == check.name) {
            return Err(Error::InvalidInput(format!("check `{}` recorded twice", check.name)));
        }
        self.checks.push(check);
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| Error::InvalidInput(e.to_string()))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
    }
}

pub fn hash_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
