//! Output directory bookkeeping and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedEntry {
    pub label: String,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    /// "running" until every output has been written, then "complete"
    pub status: String,
    pub started_unix: u64,
    pub finished_unix: Option<u64>,
    pub config: Config,
    pub replica_seeds: Vec<SeedEntry>,
    pub files: Vec<FileDigest>,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes files below one directory and records them for the manifest.
pub struct Output {
    dir: PathBuf,
    manifest: RunManifest,
}

impl Output {
    /// Creates the directory and writes the manifest in its "running" state.
    pub fn start(command: &str, cfg: &Config) -> CliResult<Output> {
        let dir = cfg.output_dir();
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        let manifest = RunManifest {
            command: command.to_string(),
            version: format!("gasket {}", env!("CARGO_PKG_VERSION")),
            seed: cfg.seed(),
            status: "running".into(),
            started_unix: now(),
            finished_unix: None,
            config: cfg.clone(),
            replica_seeds: Vec::new(),
            files: Vec::new(),
        };
        let out = Output { dir, manifest };
        out.write_manifest()?;
        Ok(out)
    }

    pub fn record_seed(&mut self, label: impl Into<String>, seed: u64) {
        self.manifest.replica_seeds.push(SeedEntry { label: label.into(), seed });
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.manifest.files.push(FileDigest { path: rel.to_string(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    fn write_manifest(&self) -> CliResult<()> {
        let path = self.dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.manifest.status = "complete".into();
        self.manifest.finished_unix = Some(now());
        self.write_manifest()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DigestMismatch {
    pub path: String,
    pub problem: String,
}

/// Recomputes every digest listed in a manifest. Paths are relative to the
/// manifest's directory.
pub fn check_manifest(path: &Path) -> CliResult<Vec<DigestMismatch>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let manifest: RunManifest =
        serde_json::from_str(&text).map_err(|e| CliError::io(path, format!("not a run manifest: {e}")))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut bad = Vec::new();
    if manifest.status != "complete" {
        bad.push(DigestMismatch {
            path: MANIFEST_FILE.into(),
            problem: format!("run status is {:?}", manifest.status),
        });
    }
    for f in &manifest.files {
        match fs::read(base.join(&f.path)) {
            Ok(bytes) => {
                let got = sha256_hex(&bytes);
                if got != f.sha256 {
                    bad.push(DigestMismatch {
                        path: f.path.clone(),
                        problem: format!("sha256 {got}, expected {}", f.sha256),
                    });
                }
            }
            Err(e) => bad.push(DigestMismatch { path: f.path.clone(), problem: e.to_string() }),
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
