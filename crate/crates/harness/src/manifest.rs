//! Run manifests: enough to re-execute a run, and nothing time-dependent.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub model_format_version: u32,
    pub subcommand: String,
    pub args: Vec<String>,
    /// Scenario after flag overrides, when the run used one.
    pub config: Option<ScenarioConfig>,
    pub seeds: BTreeMap<String, u64>,
    pub outputs: Vec<OutputEntry>,
}

impl RunManifest {
    pub fn new(subcommand: &str, args: &[String], config: Option<&ScenarioConfig>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            model_format_version: simest_core::model_file::FORMAT_VERSION,
            subcommand: subcommand.to_string(),
            args: args.to_vec(),
            config: config.cloned(),
            seeds: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn seed(&mut self, name: &str, value: u64) {
        self.seeds.insert(name.to_string(), value);
    }

    /// Record a written artifact with the digest of its bytes.
    pub fn output(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path).map_err(|e| HarnessError::io(path, e))?;
        self.outputs.push(OutputEntry {
            path: path.to_path_buf(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serialises") + "\n";
        std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Input(format!("{}: {e}", path.display())))
    }
}
