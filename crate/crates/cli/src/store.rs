//! The on-disk run directory: `out/<hash>/` holds every artifact of one
//! configuration, each filename tagged with the config hash. A manifest
//! records which command produced which file; wall-clock timestamps go to a
//! sidecar log so the primary artifacts stay byte-stable.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Path relative to the run directory.
    pub path: String,
    /// Subcommand that wrote it.
    pub command: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub config: PipelineConfig,
    /// Sorted by path; rewritten whole on every update.
    pub artifacts: Vec<ManifestEntry>,
}

/// Handle on one configuration's run directory.
pub struct RunDir {
    root: PathBuf,
    hash: String,
    config: PipelineConfig,
}

impl RunDir {
    /// Opens (creating on demand) `out_dir/<hash>/` for this configuration.
    pub fn open(config: &PipelineConfig) -> Result<Self, CliError> {
        let hash = config.hash();
        let root = config.out_dir.join(&hash);
        fs::create_dir_all(&root)?;
        // The stored copy drops the output path: like the hash, the manifest
        // describes the configuration, not where it landed on this machine.
        let mut stored = config.clone();
        stored.out_dir = PathBuf::new();
        Ok(RunDir { root, hash, config: stored })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// `stem.ext` -> `<root>/stem.<hash>.ext`.
    pub fn path(&self, stem: &str, ext: &str) -> PathBuf {
        self.root.join(format!("{stem}.{}.{ext}", self.hash))
    }

    /// As [`path`](Self::path) but nested one directory down.
    pub fn path_in(&self, dir: &str, stem: &str, ext: &str) -> PathBuf {
        self.root.join(dir).join(format!("{stem}.{}.{ext}", self.hash))
    }

    /// Writes one artifact and records it in the manifest.
    pub fn write(&self, command: &str, path: &Path, bytes: &[u8]) -> Result<(), CliError> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, bytes)?;
        self.record(command, path)?;
        Ok(())
    }

    pub fn write_json<T: Serialize>(
        &self,
        command: &str,
        path: &Path,
        value: &T,
    ) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(command, path, text.as_bytes())
    }

    pub fn read_json<T: for<'de> Deserialize<'de>>(&self, path: &Path) -> Result<T, CliError> {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::runtime(format!("cannot read {}: {e}", path.display()))
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    fn manifest_path(&self) -> PathBuf {
        self.path("manifest", "json")
    }

    pub fn manifest(&self) -> Result<Manifest, CliError> {
        let path = self.manifest_path();
        if path.exists() {
            self.read_json(&path)
        } else {
            Ok(Manifest {
                config_hash: self.hash.clone(),
                config: self.config.clone(),
                artifacts: Vec::new(),
            })
        }
    }

    fn record(&self, command: &str, artifact: &Path) -> Result<(), CliError> {
        let relative = artifact
            .strip_prefix(&self.root)
            .unwrap_or(artifact)
            .to_string_lossy()
            .into_owned();
        let mut manifest = self.manifest()?;
        let entry = ManifestEntry { path: relative, command: command.to_owned() };
        manifest.artifacts.retain(|a| a.path != entry.path);
        manifest.artifacts.push(entry);
        manifest.artifacts.sort();
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(self.manifest_path(), text)?;
        Ok(())
    }

    /// Appends a timestamped line to the sidecar log. The log is the only
    /// artifact allowed to differ between identical reruns.
    pub fn log(&self, command: &str, message: &str) {
        let stamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let line = format!("[{stamp}] {command}: {message}\n");
        let path = self.path("run", "log");
        let _ = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .and_then(|mut f| std::io::Write::write_all(&mut f, line.as_bytes()));
    }
}

/// CSV helper: rows of already-formatted cells, one header line.
pub fn csv_lines(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    out
}
