//! Output directory bookkeeping: atomic writes, SHA-256 digests and the
//! run manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    /// File path, or `synthetic` for generated data.
    pub source: String,
    /// Digest of the file bytes, or of the generated records as CSV.
    pub sha256: String,
    pub records: usize,
    pub dropped_rows: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct ExperimentManifest {
    pub toolkit_version: &'static str,
    pub command: String,
    pub config: Value,
    pub input: Option<InputDigest>,
    pub seeds: Vec<u64>,
    pub outputs: Vec<OutputEntry>,
    pub timings: Vec<Timing>,
}

/// Writes a file through a temporary sibling so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Usage(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, bytes)
        .and_then(|()| fs::rename(&tmp, path))
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

/// Files written by one run. Entries are kept in write order.
pub struct Outputs {
    dir: PathBuf,
    entries: Vec<OutputEntry>,
    timings: Vec<Timing>,
    started: Instant,
}

impl Outputs {
    pub fn create(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Usage(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            entries: Vec::new(),
            timings: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        write_atomic(&self.dir.join(name), bytes)?;
        self.entries.push(OutputEntry {
            file: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
        Ok(())
    }

    /// Renders into memory with one of the library's CSV writers, then writes.
    pub fn write_with(
        &mut self,
        name: &str,
        render: impl FnOnce(&mut Vec<u8>) -> windxai::Result<()>,
    ) -> CliResult<()> {
        let mut buf = Vec::new();
        render(&mut buf)?;
        self.write(name, &buf)
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t0 = Instant::now();
        let out = f();
        self.timings.push(Timing {
            stage: stage.to_string(),
            seconds: t0.elapsed().as_secs_f64(),
        });
        out
    }

    /// Writes the manifest last, naming every file written before it.
    pub fn finish(
        mut self,
        manifest_name: &str,
        command: &str,
        config: Value,
        input: Option<InputDigest>,
        seeds: Vec<u64>,
    ) -> CliResult<PathBuf> {
        self.timings.push(Timing {
            stage: "total".into(),
            seconds: self.started.elapsed().as_secs_f64(),
        });
        let manifest = ExperimentManifest {
            toolkit_version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config,
            input,
            seeds,
            outputs: self.entries,
            timings: self.timings,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.dir.join(manifest_name);
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}
