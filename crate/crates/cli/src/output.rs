//! Artifact serialization and the run manifest.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use nlle_core::format_float;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Builds a CSV table with one header row.
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let cols: Vec<&str> = header.iter().map(AsRef::as_ref).collect();
        Csv {
            text: format!("{}\n", cols.join(",")),
            columns: cols.len(),
        }
    }

    /// Appends a row of pre-formatted fields.
    pub fn row(&mut self, fields: &[String]) {
        assert_eq!(fields.len(), self.columns, "csv row width");
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}

pub fn num(v: f64) -> String {
    format_float(v)
}

/// Empty field for an absent value.
pub fn opt(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

/// Column names `prefix1..prefixN`.
pub fn indexed(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

pub fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("artifact serializes");
    bytes.push(b'\n');
    bytes
}

/// One file written by a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub sampling: u64,
    pub perturbation: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub analysis: String,
    pub config: serde_json::Value,
    pub seeds: Seeds,
    pub files: Vec<ArtifactEntry>,
    pub wall_time_seconds: f64,
    /// Non-fatal observations, e.g. a curve that did not saturate.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes files into `dir`, removing everything already written if any
/// write fails.
pub fn write_all(dir: &Path, files: &[(String, Vec<u8>)]) -> io::Result<Vec<ArtifactEntry>> {
    let created_dir = !dir.exists();
    fs::create_dir_all(dir)?;
    let mut written: Vec<PathBuf> = Vec::new();
    let mut entries = Vec::new();
    for (name, bytes) in files {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, bytes) {
            remove_partial(dir, &written, created_dir);
            return Err(e);
        }
        written.push(path);
        entries.push(ArtifactEntry {
            path: name.clone(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
    }
    Ok(entries)
}

pub fn remove_partial(dir: &Path, written: &[PathBuf], created_dir: bool) {
    for p in written {
        let _ = fs::remove_file(p);
    }
    if created_dir {
        let _ = fs::remove_dir(dir);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut c = Csv::new(&["tau", "x"]);
        c.row(&[num(0.5), opt(None)]);
        let text = String::from_utf8(c.into_bytes()).unwrap();
        assert_eq!(text, "tau,x\n5.0000000000000000e-1,\n");
    }

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn failed_write_leaves_nothing() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("out");
        let files = vec![
            ("a.csv".to_string(), b"a\n".to_vec()),
            ("missing/b.csv".to_string(), b"b\n".to_vec()),
        ];
        assert!(write_all(&dir, &files).is_err());
        assert!(!dir.exists());
    }
}
