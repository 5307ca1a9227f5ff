//! Artifact writing and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Format;
use crate::error::{CliError, CliResult};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    /// Human-readable pass condition, e.g. "< 1e-9".
    pub condition: String,
}

impl Verdict {
    /// Passes when `value < limit`.
    pub fn below(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            passed: value < limit,
            value,
            condition: format!("< {limit:e}"),
        }
    }

    /// Passes when `value <= limit`.
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= limit,
            value,
            condition: format!("<= {limit:e}"),
        }
    }

    /// Passes when `value > limit`.
    pub fn above(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            passed: value > limit,
            value,
            condition: format!("> {limit:e}"),
        }
    }

    /// Passes when `value` is zero (a count of violations).
    pub fn none(name: &str, count: usize) -> Self {
        Self {
            name: name.into(),
            passed: count == 0,
            value: count as f64,
            condition: "= 0".into(),
        }
    }

    pub fn holds(name: &str, ok: bool) -> Self {
        Self {
            name: name.into(),
            passed: ok,
            value: if ok { 1.0 } else { 0.0 },
            condition: "= 1".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub wall_time_seconds: f64,
    pub passed: bool,
    pub verdicts: Vec<Verdict>,
    pub metrics: BTreeMap<String, f64>,
    /// Every artifact written by the run except the manifest itself.
    pub files: Vec<FileDigest>,
}

impl RunManifest {
    pub fn failed_checks(&self) -> impl Iterator<Item = &Verdict> {
        self.verdicts.iter().filter(|v| !v.passed)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes artifacts into one directory and records their digests.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    format: Format,
    files: Vec<FileDigest>,
}

impl OutputDir {
    pub fn create(root: &Path, format: Format) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            format,
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn format(&self) -> Format {
        self.format
    }

    /// Writes `name` (relative to the root) and records its digest.
    pub fn write(&mut self, name: &str, contents: &[u8]) -> CliResult<()> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.files.retain(|f| f.path != name);
        self.files.push(FileDigest {
            path: name.into(),
            sha256: sha256_hex(contents),
            bytes: contents.len() as u64,
        });
        Ok(())
    }

    /// Writes `<stem>.csv` or `<stem>.json` depending on the chosen format.
    pub fn table<T: Serialize>(&mut self, stem: &str, csv: impl FnOnce() -> String, json: &T) -> CliResult<()> {
        match self.format {
            Format::Csv => self.write(&format!("{stem}.csv"), csv().as_bytes()),
            Format::Json => {
                let text = serde_json::to_string_pretty(json).map_err(|e| CliError::Core(e.into()))?;
                self.write(&format!("{stem}.json"), text.as_bytes())
            }
        }
    }

    /// Records a file written by someone else below the root.
    pub fn record(&mut self, path: String, sha256: String, bytes: u64) {
        self.files.retain(|f| f.path != path);
        self.files.push(FileDigest { path, sha256, bytes });
    }

    /// Records an existing file below the root by reading it back.
    pub fn record_existing(&mut self, name: &str) -> CliResult<()> {
        let path = self.root.join(name);
        let contents = fs::read(&path).map_err(|e| CliError::io(&path, e))?;
        self.record(name.into(), sha256_hex(&contents), contents.len() as u64);
        Ok(())
    }

    pub fn files(&self) -> &[FileDigest] {
        &self.files
    }

    /// Serializes the manifest next to the artifacts.
    pub fn finish(self, mut manifest: RunManifest) -> CliResult<RunManifest> {
        manifest.files = self.files;
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Core(e.into()))?;
        let path = self.root.join(MANIFEST_NAME);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_known_input() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn rewriting_a_file_keeps_one_entry() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path(), Format::Csv).unwrap();
        out.write("a.csv", b"1").unwrap();
        out.write("a.csv", b"2").unwrap();
        out.write("sub/b.csv", b"3").unwrap();
        assert_eq!(out.files().len(), 2);
        assert_eq!(out.files()[0].sha256, sha256_hex(b"2"));
        assert!(dir.path().join("sub/b.csv").exists());
    }

    #[test]
    fn verdict_constructors() {
        assert!(Verdict::below("x", 1e-10, 1e-9).passed);
        assert!(!Verdict::above("x", 0.0, 0.0).passed);
        assert!(!Verdict::none("x", 2).passed);
        assert!(Verdict::holds("x", true).passed);
    }
}
