//! Output directory handling: atomic file writes and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RawConfig;
use crate::CliError;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Echo of the inputs plus a hash of every file written next to it. Holds no
/// timestamps or absolute paths, so reruns produce the same bytes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub inputs: Vec<RawConfig>,
    pub files: Vec<FileEntry>,
    /// sha256 over the sorted `name sha256` lines of `files`.
    pub content_hash: String,
}

fn hex_digest(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Collects files for one output directory and writes each one atomically.
pub struct OutputDir {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| {
            CliError::Config(format!(
                "output directory {} is not writable: {e}",
                dir.display()
            ))
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    /// Writes to a temporary file in the directory, then renames it over `name`.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        write_atomic(&self.dir.join(name), bytes)?;
        self.files.retain(|f| f.name != name);
        self.files.push(FileEntry {
            name: name.to_owned(),
            bytes: bytes.len(),
            sha256: hex_digest(bytes),
        });
        Ok(())
    }

    /// Writes `manifest.json` covering every file written so far.
    pub fn finish(mut self, command: &str, inputs: Vec<RawConfig>) -> Result<Manifest, CliError> {
        self.files.sort_by(|a, b| a.name.cmp(&b.name));
        let listing: String = self
            .files
            .iter()
            .map(|f| format!("{} {}\n", f.name, f.sha256))
            .collect();
        let manifest = Manifest {
            tool: "aclgait",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_owned(),
            inputs,
            content_hash: hex_digest(listing.as_bytes()),
            files: self.files,
        };
        let mut json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        json.push(b'\n');
        write_atomic(&self.dir.join(MANIFEST_NAME), &json)?;
        Ok(manifest)
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io {
        context: format!("writing {}", path.display()),
        source: e,
    };
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
