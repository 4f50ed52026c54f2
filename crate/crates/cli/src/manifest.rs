//! Run provenance: every file-producing command drops a manifest next to its
//! primary output so a result can be traced to the exact invocation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::ops::CliError;

#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    /// Fully materialized settings, defaults included.
    pub config: serde_json::Value,
    /// Input path -> SHA-256 of its bytes.
    pub inputs: BTreeMap<String, String>,
    pub duration_ms: f64,
}

pub struct ManifestBuilder {
    command: String,
    seed: u64,
    config: serde_json::Value,
    inputs: BTreeMap<String, String>,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            seed,
            config: serde_json::Value::Null,
            inputs: BTreeMap::new(),
            started: Instant::now(),
        }
    }

    pub fn config(&mut self, value: impl Serialize) {
        self.config = serde_json::to_value(value).expect("config serializes");
    }

    pub fn input(&mut self, path: &Path, bytes: &[u8]) {
        let mut hasher = Sha256::new();
        hasher.update(bytes);
        let digest = hasher.finalize();
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.inputs.insert(path.display().to_string(), hex);
    }

    /// Writes `<out>.manifest.json` beside the primary output.
    pub fn write_beside(self, out: &Path) -> Result<(), CliError> {
        let manifest = RunManifest {
            command: self.command,
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.seed,
            config: self.config,
            inputs: self.inputs,
            duration_ms: self.started.elapsed().as_secs_f64() * 1e3,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        crate::ops::write_text(&manifest_path(out), &text)
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}
