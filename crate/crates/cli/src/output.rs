use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::validation;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Append-only run directory. An artifact may be rewritten only with
/// identical bytes; every command appends one manifest line.
pub struct RunDir {
    dir: PathBuf,
    written: Vec<(String, String)>,
}

#[derive(Serialize)]
struct ManifestEntry<'a> {
    command: &'a str,
    config_sha256: &'a str,
    seed: Option<u64>,
    artifacts: Vec<Artifact<'a>>,
}

#[derive(Serialize)]
struct Artifact<'a> {
    file: &'a str,
    sha256: &'a str,
}

impl RunDir {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        if path.exists() {
            let existing = std::fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
            if existing != bytes {
                bail!(validation(format!(
                    "{} exists with different content; output directories are append-only",
                    path.display()
                )));
            }
        } else {
            std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        }
        self.written.push((name.to_string(), sha256_hex(bytes)));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn write_csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
        self.write(name, &bytes)
    }

    pub fn finish(self, command: &str, config_sha256: &str, seed: Option<u64>) -> Result<Vec<PathBuf>> {
        let entry = ManifestEntry {
            command,
            config_sha256,
            seed,
            artifacts: self
                .written
                .iter()
                .map(|(f, h)| Artifact { file: f, sha256: h })
                .collect(),
        };
        let mut line = serde_json::to_string(&entry)?;
        line.push('\n');
        let manifest = self.dir.join("manifest.jsonl");
        OpenOptions::new()
            .create(true)
            .append(true)
            .open(&manifest)
            .and_then(|mut f| f.write_all(line.as_bytes()))
            .with_context(|| format!("appending to {}", manifest.display()))?;
        Ok(self.written.iter().map(|(f, _)| self.dir.join(f)).collect())
    }
}
