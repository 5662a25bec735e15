//! Run output directory and the manifest written when a run completes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::BenchError;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    /// SHA-256 of the effective config, serialized as TOML.
    pub config_hash: String,
    pub seed: u64,
    pub code_version: String,
    /// Wall-clock seconds since the Unix epoch.
    pub started_at: f64,
    pub finished_at: f64,
    pub files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Output directory of one run. Files are registered as they are written;
/// the manifest is only produced by [`RunDir::finish`].
#[derive(Debug)]
pub struct RunDir {
    root: PathBuf,
    files: Vec<String>,
}

impl RunDir {
    /// Creates the directory and removes any manifest left by an earlier run,
    /// so an interrupted run never looks complete.
    pub fn create(root: &Path) -> Result<Self, BenchError> {
        std::fs::create_dir_all(root)?;
        let stale = root.join(MANIFEST_NAME);
        if stale.exists() {
            std::fs::remove_file(stale)?;
        }
        Ok(RunDir { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    /// Writes `name` through `fill` and registers it.
    pub fn write<F>(&mut self, name: &str, fill: F) -> Result<PathBuf, BenchError>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<(), BenchError>,
    {
        let path = self.root.join(name);
        let mut w = BufWriter::new(File::create(&path)?);
        fill(&mut w)?;
        w.flush()?;
        self.register(name);
        Ok(path)
    }

    /// Registers a file written by other means (e.g. a sidecar).
    pub fn register(&mut self, name: &str) {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
    }

    pub fn finish(self, mut manifest: RunManifest) -> Result<RunManifest, BenchError> {
        manifest.files = self
            .files
            .iter()
            .map(|name| {
                let bytes = std::fs::read(self.root.join(name))?;
                Ok(FileEntry { name: name.clone(), sha256: sha256_hex(&bytes), bytes: bytes.len() as u64 })
            })
            .collect::<Result<_, BenchError>>()?;
        manifest.finished_at = now();
        let json = serde_json::to_string_pretty(&manifest).map_err(|e| BenchError::Io(e.to_string()))?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.root)?;
        tmp.write_all(json.as_bytes())?;
        tmp.write_all(b"\n")?;
        tmp.as_file().sync_all()?;
        tmp.persist(self.root.join(MANIFEST_NAME)).map_err(|e| BenchError::Io(e.to_string()))?;
        Ok(manifest)
    }
}
