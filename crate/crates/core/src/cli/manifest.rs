//! `manifest.json`: what was run, on what, and a digest of what it wrote.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    /// Every effective setting, defaults included.
    pub config: BTreeMap<String, String>,
    pub version: String,
    /// Seconds since the Unix epoch. Not part of the digest.
    pub timestamp: u64,
    pub outputs: Vec<String>,
    /// SHA-256 over the output files, see [`output_digest`].
    pub output_digest: String,
}

/// SHA-256 over each output's relative path and contents, in path order.
/// Lengths are included so no two file sets share an encoding.
pub fn output_digest(files: &BTreeMap<String, Vec<u8>>) -> String {
    let mut h = Sha256::new();
    for (path, bytes) in files {
        h.update((path.len() as u64).to_le_bytes());
        h.update(path.as_bytes());
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    hex::encode(h.finalize())
}

/// Output files collected in memory, written at the end by a single writer.
#[derive(Debug, Default)]
pub(crate) struct OutputSet {
    files: BTreeMap<String, Vec<u8>>,
}

impl OutputSet {
    pub(crate) fn add(&mut self, rel: impl Into<String>, bytes: impl Into<Vec<u8>>) {
        self.files.insert(rel.into(), bytes.into());
    }

    /// Writes every file and the manifest under `dir`; returns the digest.
    pub(crate) fn write(
        self,
        dir: &Path,
        command: &str,
        inputs: &[PathBuf],
        config: BTreeMap<String, String>,
    ) -> Result<String, CliError> {
        if self.files.contains_key(MANIFEST_FILE) {
            return Err(CliError::new(
                super::ExitCode::Internal,
                "Internal",
                "an output is named like the manifest",
            ));
        }
        let digest = output_digest(&self.files);
        for (rel, bytes) in &self.files {
            let path = dir.join(rel);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e, true))?;
            }
            std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e, true))?;
        }
        let manifest = RunManifest {
            command: command.into(),
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            config,
            version: env!("CARGO_PKG_VERSION").into(),
            timestamp: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            outputs: self.files.keys().cloned().collect(),
            output_digest: digest.clone(),
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e, true))?;
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e, true))?;
        Ok(digest)
    }
}

impl RunManifest {
    pub fn read(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e, false))?;
        Ok(crate::ingest::scene::from_json(&text)?)
    }

    /// Recomputes the digest from the files on disk.
    pub fn verify(&self, dir: &Path) -> Result<bool, CliError> {
        let mut files = BTreeMap::new();
        for rel in &self.outputs {
            let path = dir.join(rel);
            files.insert(
                rel.clone(),
                std::fs::read(&path).map_err(|e| CliError::io(&path, e, false))?,
            );
        }
        Ok(output_digest(&files) == self.output_digest)
    }
}
