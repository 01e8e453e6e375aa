//! Result records, CSV tables and the content-hash manifest.

use crate::error::CliError;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleOutcome {
    pub lengths: Vec<f64>,
    pub lambda1: Vec<f64>,
    /// `1/L^2` extrapolation from the two largest boxes.
    pub lambda_extrapolated: f64,
    /// Prediction error of the fit at the smallest box.
    pub fit_residual: f64,
    pub e1: f64,
    /// `e1 - lambda_extrapolated` (bend) or `lambda_extrapolated - e1`
    /// (twist): the spectral gap the scenario demonstrates.
    pub delta: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HarnessOutcome {
    pub seed: u64,
    pub size: usize,
    pub lambda: f64,
    pub eps: f64,
    pub bound: f64,
    pub min_ratio: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResultRecord {
    pub schema_version: u32,
    pub artifact_version: String,
    pub scenario_name: String,
    pub experiment: String,
    /// SHA-256 of the scenario JSON (canonicalized through serde_json).
    pub scenario_hash: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub cross_section_energies: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub eigenvalues: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub eigenvalue_residuals: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub counts: Vec<(f64, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan: Option<layerlab_core::weyl::ScanReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_states: Option<Vec<(f64, Vec<f64>)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<CounterexampleOutcome>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub harness: Vec<HarnessOutcome>,
    pub files: Vec<FileEntry>,
}

impl ResultRecord {
    pub fn new(name: &str, experiment: &str, raw_scenario: &serde_json::Value) -> Self {
        let canonical = serde_json::to_vec(raw_scenario).unwrap_or_default();
        let hash = hex_digest(&canonical);
        Self {
            schema_version: 1,
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            scenario_name: name.to_string(),
            experiment: experiment.to_string(),
            scenario_hash: hash,
            started_unix: unix_now(),
            finished_unix: 0,
            cross_section_energies: Vec::new(),
            eigenvalues: Vec::new(),
            eigenvalue_residuals: Vec::new(),
            counts: Vec::new(),
            scan: None,
            bound_states: None,
            counterexample: None,
            harness: Vec::new(),
            files: Vec::new(),
        }
    }
}

pub fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    let mut s = String::with_capacity(64);
    for b in out {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

/// Deterministic float formatting for all numeric tables.
pub fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}

/// Collects written files and their hashes.
pub struct OutputDir {
    dir: PathBuf,
    pub files: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("creating {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
        self.files.push(FileEntry {
            name: name.to_string(),
            sha256: hex_digest(contents.as_bytes()),
            bytes: contents.len(),
        });
        Ok(())
    }

    /// Register an externally written binary file in the manifest.
    pub fn register(&mut self, name: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let bytes = std::fs::read(&path)
            .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
        self.files.push(FileEntry {
            name: name.to_string(),
            sha256: hex_digest(&bytes),
            bytes: bytes.len(),
        });
        Ok(())
    }

    pub fn finish(mut self, mut record: ResultRecord) -> Result<ResultRecord, CliError> {
        record.finished_unix = unix_now();
        record.files = std::mem::take(&mut self.files);
        let json = serde_json::to_string_pretty(&record)
            .map_err(|e| CliError::Io(format!("serializing results: {e}")))?;
        let path = self.dir.join("results.json");
        std::fs::write(&path, json)
            .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
        Ok(record)
    }
}

/// CSV table builder with deterministic formatting.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        Self { text: format!("{header}\n") }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}
