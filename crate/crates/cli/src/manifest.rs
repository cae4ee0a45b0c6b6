//! `manifest.json`: config snapshot, stage timestamps and artifact hashes.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    /// Milliseconds since the Unix epoch.
    pub started_ms: u128,
    pub finished_ms: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: PipelineConfig,
    pub stages: BTreeMap<String, StageRecord>,
    /// File name to hex SHA-256 digest.
    pub artifacts: BTreeMap<String, String>,
}

pub fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis())
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Input(format!("cannot hash {}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl RunManifest {
    /// The manifest in `out_dir`, or a fresh one. The config snapshot is
    /// always replaced by `config`.
    pub fn load_or_new(out_dir: &Path, config: &PipelineConfig) -> CliResult<Self> {
        let path = out_dir.join(MANIFEST_FILE);
        let mut manifest = if path.is_file() {
            Self::load(out_dir)?
        } else {
            RunManifest { config: config.clone(), stages: BTreeMap::new(), artifacts: BTreeMap::new() }
        };
        manifest.config = config.clone();
        Ok(manifest)
    }

    /// The manifest stored in `out_dir`.
    pub fn load(out_dir: &Path) -> CliResult<Self> {
        let path = out_dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    pub fn record(&mut self, out_dir: &Path, stage: &str, started_ms: u128, files: &[&str]) -> CliResult<()> {
        for f in files {
            self.artifacts.insert((*f).to_string(), sha256_file(&out_dir.join(f))?);
        }
        self.stages.insert(stage.to_string(), StageRecord { started_ms, finished_ms: now_ms() });
        Ok(())
    }

    pub fn save(&self, out_dir: &Path) -> CliResult<()> {
        let path = out_dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
    }
}
