use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{hex, ExperimentConfig, Scheme};
use crate::error::{HarnessError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Failed,
}

/// Headline numbers of a finished run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub episodes: u64,
    pub final_window: usize,
    pub final_mean_return_env: f64,
    pub collisions: u64,
    pub total_steps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub episode: u64,
    pub error: String,
}

/// Describes one run directory: what was run, with which config and seed, and the content hash
/// of every artifact written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub status: RunStatus,
    pub scheme: Scheme,
    pub seed: u64,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub harness_version: String,
    /// File name to git-style SHA-256 blob id.
    pub artifacts: BTreeMap<String, String>,
    pub summary: Option<RunSummary>,
    pub failure: Option<Failure>,
}

impl RunManifest {
    pub fn new(scheme: Scheme, seed: u64, config: &ExperimentConfig) -> Self {
        Self {
            status: RunStatus::Completed,
            scheme,
            seed,
            config_hash: config.hash(),
            config: config.clone(),
            harness_version: env!("CARGO_PKG_VERSION").into(),
            artifacts: BTreeMap::new(),
            summary: None,
            failure: None,
        }
    }

    /// Hash every named file that exists in `dir`.
    pub fn record_artifacts(&mut self, dir: &Path, names: &[&str]) -> Result<()> {
        for name in names {
            let path = dir.join(name);
            if path.exists() {
                let bytes = std::fs::read(&path).map_err(HarnessError::io(&path))?;
                self.artifacts.insert(name.to_string(), blob_sha256(&bytes));
            }
        }
        Ok(())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(HarnessError::io(&path))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(HarnessError::io(&path))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::format(&path, e))
    }
}

/// Git's object id for a blob, computed with SHA-256: `sha256("blob <len>\0" ++ bytes)`.
pub fn blob_sha256(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex(&h.finalize())
}
