//! Artifact emission: CSV/JSON writers, content hashing, and the run
//! manifest. Data artifacts go only to files; logs go to standard error.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct ArtifactEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Collects artifacts in a fixed order, writes them under the output
/// directory, and finishes with a `manifest.json` naming every file and its
/// content hash.
pub struct ArtifactSink {
    dir: PathBuf,
    entries: Vec<ArtifactEntry>,
}

impl ArtifactSink {
    pub fn new(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(ArtifactSink { dir: dir.to_path_buf(), entries: Vec::new() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        let mut hasher = Sha256::new();
        hasher.update(bytes);
        let sha256 = hex(&hasher.finalize());
        let path = self.dir.join(name);
        let mut file = fs::File::create(&path)?;
        file.write_all(bytes)?;
        self.entries.push(ArtifactEntry { file: name.to_string(), sha256, bytes: bytes.len() });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Writes the manifest and returns all entries (manifest included).
    pub fn finish(mut self, header: ManifestHeader) -> std::io::Result<Vec<ArtifactEntry>> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            #[serde(flatten)]
            header: &'a ManifestHeader,
            artifacts: &'a [ArtifactEntry],
        }
        let manifest = Manifest { header: &header, artifacts: &self.entries };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.dir.join("manifest.json");
        fs::write(&path, &text)?;
        let mut hasher = Sha256::new();
        hasher.update(text.as_bytes());
        self.entries.push(ArtifactEntry {
            file: "manifest.json".to_string(),
            sha256: hex(&hasher.finalize()),
            bytes: text.len(),
        });
        Ok(self.entries)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestHeader {
    pub tool: &'static str,
    pub version: &'static str,
    pub kind: String,
    pub seed: u64,
    pub config_sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex(&hasher.finalize())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Minimal CSV assembly: header row plus shortest-roundtrip float formatting
/// with `.` decimals.
pub struct Csv {
    buf: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv { buf: format!("{}\n", header.join(",")), columns: header.len() }
    }

    pub fn row(&mut self, cells: &[CsvCell]) {
        assert_eq!(cells.len(), self.columns, "csv row arity");
        for (k, cell) in cells.iter().enumerate() {
            if k > 0 {
                self.buf.push(',');
            }
            match cell {
                CsvCell::Int(v) => self.buf.push_str(&v.to_string()),
                CsvCell::Float(v) => self.buf.push_str(&format_float(*v)),
                CsvCell::Text(v) => self.buf.push_str(v),
            }
        }
        self.buf.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf.into_bytes()
    }
}

pub enum CsvCell {
    Int(i64),
    Float(f64),
    Text(String),
}

fn format_float(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.is_finite() {
        let a = v.abs();
        if (1e-4..1e16).contains(&a) {
            format!("{v}")
        } else {
            format!("{v:e}")
        }
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}
