//! Run manifests: what a run produced and how to reproduce it.

use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub code_version: String,
    pub env_name: String,
    pub difficulty: String,
    pub algorithm: String,
    pub seeds: Vec<u64>,
    pub started_at: String,
    pub finished_at: Option<String>,
    /// Every file the run wrote, relative to the run directory.
    pub artifacts: Vec<String>,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(dir.join("manifest.json"), json)
    }

    pub fn read(dir: &Path) -> std::io::Result<RunManifest> {
        let text = std::fs::read_to_string(dir.join("manifest.json"))?;
        serde_json::from_str(&text)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

pub fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339()
}
