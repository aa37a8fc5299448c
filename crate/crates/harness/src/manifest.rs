use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::results::write_file;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Replicates `start..end` at scale `n`, of which `completed` are on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRange {
    pub n: f64,
    pub start: u64,
    pub end: u64,
    pub completed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub config: String,
    pub code_version: String,
    pub seed: u64,
    /// `running`, `failed` or `complete`.
    pub status: String,
    pub workers: usize,
    pub replicate_ranges: Vec<ReplicateRange>,
    pub outputs: Vec<String>,
    pub started_unix: u64,
    pub finished_unix: Option<u64>,
    pub elapsed_seconds: f64,
}

pub fn code_version() -> String {
    format!("eucfpp {}", env!("CARGO_PKG_VERSION"))
}

pub fn unix_now() -> u64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

impl RunManifest {
    pub fn read(dir: &Path) -> Result<Option<Self>> {
        let path = dir.join(MANIFEST_FILE);
        match std::fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text)
                .map(Some)
                .map_err(|e| HarnessError::Resume(format!("{}: {e}", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(HarnessError::io(path, e)),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        write_file(&dir.join(MANIFEST_FILE), text.as_bytes())
    }
}
