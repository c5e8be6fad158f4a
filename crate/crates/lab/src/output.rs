use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::LabError;

/// Writes `bytes` to a temporary file beside `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), LabError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| LabError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| LabError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| LabError::io(path, e))?;
    tmp.persist(path).map_err(|e| LabError::io(path, e.error))?;
    Ok(())
}

/// 17 significant digits; non-finite values as `inf`, `-inf`, `nan`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// In-memory CSV table with a fixed header.
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, LabError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<(), LabError> {
        write_atomic(path, &self.to_bytes()?)
    }
}

/// Header of every [`fns_core::EstimateReport`] table.
pub const REPORT_HEADER: [&str; 10] = [
    "label",
    "gamma",
    "d",
    "k",
    "alpha",
    "p",
    "measured_sup",
    "normalized_constant",
    "threshold",
    "pass",
];

pub fn report_row(r: &fns_core::EstimateReport) -> Vec<String> {
    let p = &r.params;
    vec![
        p.label.clone(),
        fmt_opt(p.gamma),
        p.d.map(|v| v.to_string()).unwrap_or_default(),
        p.k.map(|v| v.to_string()).unwrap_or_default(),
        fmt_opt(p.alpha),
        fmt_opt(p.p),
        fmt_f64(r.measured_sup),
        fmt_f64(r.normalized_constant),
        fmt_f64(r.threshold),
        r.pass.to_string(),
    ]
}

/// SHA-256 of the canonical JSON of `(command, config)`.
pub fn config_digest(command: &str, config: &serde_json::Value) -> String {
    let canonical = serde_json::json!({ "command": command, "config": config });
    let bytes = serde_json::to_vec(&canonical).expect("JSON values always serialize");
    hex::encode(Sha256::digest(&bytes))
}

#[derive(Debug, Clone, Serialize, serde::Deserialize, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub config_digest: String,
    pub tool_version: String,
    pub started: String,
    pub finished: String,
    pub threads: usize,
    pub outputs: Vec<String>,
    pub pass: bool,
}

pub fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Collects the files a command produces under its output directory.
pub struct OutputSet {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
}

impl OutputSet {
    pub fn new(dir: PathBuf) -> Self {
        OutputSet { dir, files: Vec::new() }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn csv(&mut self, name: &str, table: &CsvTable) -> Result<(), LabError> {
        let path = self.path(name);
        table.write(&path)?;
        self.files.push(path);
        Ok(())
    }

    pub fn record(&mut self, path: PathBuf) {
        self.files.push(path);
    }
}
