//! Per-run record of what was executed and what it produced.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Full argument vector, so the run can be repeated.
    pub args: Vec<String>,
    /// SHA-256 of `config`, hex encoded.
    pub config_hash: String,
    /// The resolved configuration in canonical form.
    pub config: String,
    pub seeds: Vec<u64>,
    /// Input files other than the configuration, with their SHA-256.
    #[serde(default)]
    pub inputs: Vec<(String, String)>,
    pub tool_version: String,
    /// Files written by the run, relative to the output directory.
    pub outputs: Vec<String>,
    pub started_unix_s: f64,
    pub wall_clock_s: f64,
    #[serde(skip)]
    started: Option<Instant>,
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl RunManifest {
    pub fn start(command: &str, args: Vec<String>, config: String, seeds: Vec<u64>) -> Self {
        let started_unix_s = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0);
        Self {
            command: command.to_string(),
            args,
            config_hash: sha256_hex(&config),
            config,
            seeds,
            inputs: Vec::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: Vec::new(),
            started_unix_s,
            wall_clock_s: 0.0,
            started: Some(Instant::now()),
        }
    }

    /// Records the hash of an input file (each file of a directory).
    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let mut files = Vec::new();
        if path.is_dir() {
            for e in std::fs::read_dir(path)? {
                files.push(e?.path());
            }
            files.sort();
        } else {
            files.push(path.to_path_buf());
        }
        for f in files.into_iter().filter(|f| f.is_file()) {
            let bytes = std::fs::read(&f)?;
            let hash = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
            self.inputs.push((f.display().to_string(), hash));
        }
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path, out_dir: &Path) {
        let rel = path.strip_prefix(out_dir).unwrap_or(path);
        let s = rel.to_string_lossy().into_owned();
        if !self.outputs.contains(&s) {
            self.outputs.push(s);
        }
    }

    /// Stops the clock and writes `manifest.json` into `out_dir`.
    pub fn finish(&mut self, out_dir: &Path) -> Result<PathBuf> {
        if let Some(t) = self.started {
            self.wall_clock_s = t.elapsed().as_secs_f64();
        }
        let path = out_dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Data(e.to_string()))?;
        std::fs::write(&path, text)?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let m: Self = serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        if sha256_hex(&m.config) != m.config_hash {
            return Err(Error::Data(format!("{}: config hash mismatch", path.display())));
        }
        Ok(m)
    }
}
