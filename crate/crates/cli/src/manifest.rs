//! Run manifest: one JSON line per stage execution with content hashes of
//! inputs and outputs, so a rerun with identical inputs and seed can be
//! verified byte-for-byte.

use anyhow::Result;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct ManifestEntry {
    pub stage: String,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub config: std::collections::BTreeMap<String, String>,
    pub inputs: Vec<FileEntry>,
    pub outputs: Vec<FileEntry>,
}

pub fn hash_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let mut h = Sha256::new();
    h.update(&bytes);
    Ok(hex(&h.finalize()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub struct ManifestWriter {
    path: PathBuf,
    entry: ManifestEntry,
}

impl ManifestWriter {
    pub fn new(out_dir: &Path, stage: &str, seed: Option<u64>) -> ManifestWriter {
        ManifestWriter {
            path: out_dir.join("manifest.jsonl"),
            entry: ManifestEntry {
                stage: stage.to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                seed,
                config: Default::default(),
                inputs: Vec::new(),
                outputs: Vec::new(),
            },
        }
    }

    pub fn config(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entry.config.insert(key.to_string(), value.to_string());
        self
    }

    pub fn input(&mut self, path: &Path) -> Result<&mut Self> {
        self.entry.inputs.push(FileEntry {
            path: path.display().to_string(),
            sha256: hash_file(path)?,
            label: None,
        });
        Ok(self)
    }

    pub fn output(&mut self, path: &Path, label: Option<&str>) -> Result<&mut Self> {
        self.entry.outputs.push(FileEntry {
            path: path.display().to_string(),
            sha256: hash_file(path)?,
            label: label.map(|s| s.to_string()),
        });
        Ok(self)
    }

    pub fn finish(self) -> Result<()> {
        if let Some(parent) = self.path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut f = std::fs::OpenOptions::new().create(true).append(true).open(&self.path)?;
        writeln!(f, "{}", serde_json::to_string(&self.entry)?)?;
        Ok(())
    }
}
