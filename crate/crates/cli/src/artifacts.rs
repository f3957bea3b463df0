//! Output directory bookkeeping: CSV and JSON writers that stamp the run id,
//! and the manifest listing every file written.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";

/// Floats in CSV files carry 17 significant digits.
pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f).unwrap_or_default()
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Run id: a digest of everything that determines the artifacts.
pub fn run_id(command: &str, config: &str, seed: u64, extra: &str) -> String {
    let mut h = Sha256::new();
    for part in [command, config, &seed.to_string(), extra] {
        h.update(part.as_bytes());
        h.update([0u8]);
    }
    hex(&h.finalize()[..8])
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub run_id: String,
    pub command: String,
    pub version: &'static str,
    pub seed: u64,
    pub config: Value,
    /// Wall-clock seconds since the Unix epoch.
    pub started: f64,
    pub finished: f64,
    pub status: String,
    pub error: Option<String>,
    pub files: Vec<FileEntry>,
}

pub struct Artifacts {
    root: PathBuf,
    run_id: String,
    files: Mutex<BTreeSet<PathBuf>>,
}

impl Artifacts {
    pub fn new(root: &Path, run_id: String) -> io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), run_id, files: Mutex::new(BTreeSet::new()) })
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    fn create(&self, rel: &Path) -> io::Result<BufWriter<File>> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let file = File::create(&path).map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
        self.files.lock().expect("inventory lock").insert(rel.to_path_buf());
        Ok(BufWriter::new(file))
    }

    /// Opens a CSV file; the first line is a `# run_id=` comment, then the header.
    pub fn csv(&self, rel: impl AsRef<Path>, header: &[&str]) -> io::Result<Csv> {
        let mut w = self.create(rel.as_ref())?;
        writeln!(w, "# run_id={}", self.run_id)?;
        writeln!(w, "{}", header.join(","))?;
        Ok(Csv { w, width: header.len() })
    }

    /// Writes a JSON object with a `run_id` field added.
    pub fn json(&self, rel: impl AsRef<Path>, value: Value) -> io::Result<()> {
        let mut map = match value {
            Value::Object(m) => m,
            other => {
                let mut m = serde_json::Map::new();
                m.insert("data".into(), other);
                m
            }
        };
        map.insert("run_id".into(), Value::String(self.run_id.clone()));
        let mut w = self.create(rel.as_ref())?;
        serde_json::to_writer_pretty(&mut w, &Value::Object(map))?;
        writeln!(w)?;
        w.flush()
    }

    /// Every file written so far, with sizes and digests.
    pub fn inventory(&self) -> io::Result<Vec<FileEntry>> {
        let files = self.files.lock().expect("inventory lock").clone();
        files
            .into_iter()
            .map(|rel| {
                let data = fs::read(self.root.join(&rel))?;
                Ok(FileEntry {
                    path: rel.to_string_lossy().replace('\\', "/"),
                    bytes: data.len() as u64,
                    sha256: hex(&Sha256::digest(&data)),
                })
            })
            .collect()
    }

    pub fn write_manifest(&self, manifest: &RunManifest) -> io::Result<()> {
        let mut w = BufWriter::new(File::create(self.root.join(MANIFEST))?);
        serde_json::to_writer_pretty(&mut w, manifest)?;
        writeln!(w)?;
        w.flush()
    }
}

pub struct Csv {
    w: BufWriter<File>,
    width: usize,
}

impl Csv {
    pub fn row(&mut self, fields: &[String]) -> io::Result<()> {
        debug_assert_eq!(fields.len(), self.width);
        writeln!(self.w, "{}", fields.join(","))
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.w.flush()
    }
}
