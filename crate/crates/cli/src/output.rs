//! Artifact writers: every file opens with a metadata block carrying the config hash.

use anyhow::{Context, Result};
use lclab_core::ARTIFACT_VERSION;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

/// Provenance shared by all artifacts of one run.
#[derive(Debug, Clone)]
pub struct Meta {
    pub command: String,
    /// Canonical (key-sorted) config plus the effective seed and cap.
    pub canonical: String,
    pub config_sha256: String,
    pub seed: u64,
    pub created_unix: u64,
}

impl Meta {
    pub fn new(command: &str, config: &Value, seed: u64, cap_sites: usize) -> Self {
        let canonical = json!({ "command": command, "config": config, "seed": seed, "cap_sites": cap_sites }).to_string();
        let digest = Sha256::digest(canonical.as_bytes());
        let config_sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
        let created_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Meta { command: command.into(), canonical, config_sha256, seed, created_unix }
    }

    fn header_lines(&self) -> Vec<String> {
        vec![
            format!("artifact_version: {ARTIFACT_VERSION}"),
            format!("command: {}", self.command),
            format!("config_sha256: {}", self.config_sha256),
            format!("seed: {}", self.seed),
            format!("created_unix: {}", self.created_unix),
            format!("config: {}", self.canonical),
        ]
    }

    fn as_json(&self) -> Value {
        json!({
            "artifact_version": ARTIFACT_VERSION,
            "command": self.command,
            "config_sha256": self.config_sha256,
            "seed": self.seed,
            "created_unix": self.created_unix,
            "config": serde_json::from_str::<Value>(&self.canonical).unwrap_or(Value::Null),
        })
    }
}

pub struct OutDir {
    pub dir: PathBuf,
    pub meta: Meta,
    pub written: Vec<PathBuf>,
}

impl OutDir {
    pub fn new(dir: &Path, meta: Meta) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(OutDir { dir: dir.to_path_buf(), meta, written: vec![] })
    }

    pub fn csv<R, I, S>(&mut self, name: &str, header: &[&str], rows: R) -> Result<()>
    where
        R: IntoIterator<Item = I>,
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        let path = self.dir.join(name);
        let file = File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
        let mut w = BufWriter::new(file);
        for line in self.meta.header_lines() {
            writeln!(w, "# {line}")?;
        }
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(header)?;
        for r in rows {
            wtr.write_record(r)?;
        }
        wtr.flush()?;
        self.written.push(path);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, result: &T) -> Result<()> {
        let path = self.dir.join(name);
        let body = json!({ "meta": self.meta.as_json(), "result": result });
        let mut s = serde_json::to_string_pretty(&body)?;
        s.push('\n');
        std::fs::write(&path, s).with_context(|| format!("cannot write {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }
}
