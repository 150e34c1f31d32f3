//! Run directories and their manifests.

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

pub const MANIFEST: &str = "manifest.toml";

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema: u32,
    /// `<unix seconds>-<first 12 hex digits of the config hash>`
    pub run_id: String,
    pub command: String,
    pub status: String,
    pub config_sha256: String,
    pub created_unix: u64,
    pub seed: u64,
    pub threads: usize,
    /// Workspace version shared by the library and the CLI.
    pub version: String,
    /// Paths relative to the run directory, in creation order.
    pub artifacts: Vec<String>,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
    pub config: Option<toml::Value>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects artifacts of one run directory and writes its manifest.
pub struct RunDir {
    pub root: PathBuf,
    pub manifest: RunManifest,
}

impl RunDir {
    pub fn create(root: &Path, command: &str, config_text: &str, seed: u64, threads: usize) -> Result<Self> {
        std::fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        let hash = sha256_hex(config_text.as_bytes());
        let created_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Ok(RunDir {
            root: root.to_path_buf(),
            manifest: RunManifest {
                schema: 1,
                run_id: format!("{created_unix}-{}", &hash[..12]),
                command: command.into(),
                status: "running".into(),
                config_sha256: hash,
                created_unix,
                seed,
                threads,
                version: env!("CARGO_PKG_VERSION").into(),
                artifacts: Vec::new(),
                timings: BTreeMap::new(),
                config: None,
            },
        })
    }

    /// Writes `contents` to `name` under the run directory and records it.
    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.record(name);
        Ok(())
    }

    /// Records a file written by someone else (e.g. a sub-run).
    pub fn record(&mut self, name: &str) {
        if !self.manifest.artifacts.iter().any(|a| a == name) {
            self.manifest.artifacts.push(name.to_string());
        }
    }

    pub fn time(&mut self, stage: &str, seconds: f64) {
        self.manifest.timings.insert(stage.to_string(), seconds);
    }

    pub fn finish(&mut self, status: &str) -> Result<()> {
        self.manifest.status = status.to_string();
        let text = toml::to_string(&self.manifest).context("serializing manifest")?;
        let path = self.root.join(MANIFEST);
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}
