use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Fixed CSV float formatting: 12 significant digits, scientific notation.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.11e}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
    pub rows: usize,
}

/// Collects output files for the manifest.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<OutputFile>,
}

impl Outputs {
    pub fn csv(&mut self, path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(io_err)?;
        for r in rows {
            w.write_record(r).map_err(io_err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        write_file(path, &bytes)?;
        self.files.push(OutputFile {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
            rows: rows.len(),
        });
        Ok(())
    }
}

fn io_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Io(e.to_string())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// `out/kappa_sweep.csv` becomes `out/kappa_sweep.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

/// `out/reset_sweep.csv` with suffix `contour` becomes `out/reset_sweep_contour.csv`.
pub fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}_{suffix}.csv"))
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub arguments: Vec<String>,
    pub config_source: String,
    /// SHA-256 of the configuration text.
    pub config_digest: String,
    /// SHA-256 of the configuration text and the command line.
    pub input_digest: String,
    pub parameters: serde_json::Value,
    pub tool_version: String,
    pub status: String,
    pub error: Option<String>,
    pub wall_time_s: f64,
    pub summary: serde_json::Value,
    pub outputs: Vec<OutputFile>,
}
