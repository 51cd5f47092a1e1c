//! Run artifacts: CSV tables, JSON summaries and the run manifest.
//!
//! Artifacts are collected in memory and written only once a run has
//! finished, so a failed run leaves nothing behind. Everything except
//! `timing.json` is a pure function of the configuration and seed.

use crate::verify::CheckResult;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const MANIFEST_SCHEMA: &str = "ballwalk.run-manifest";
pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const TIMING_FILE: &str = "timing.json";

/// Round-trippable float: 17 significant digits in scientific notation.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

/// Missing values render as an empty field.
impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Text(String::new()), Cell::Float)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// A comma-separated table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                match c {
                    Cell::Float(v) => out.push_str(&format_float(*v)),
                    Cell::Int(v) => {
                        let _ = write!(out, "{v}");
                    }
                    // Text cells are labels chosen by the program; quote if needed anyway.
                    Cell::Text(s) if s.contains([',', '"', '\n']) => {
                        let _ = write!(out, "\"{}\"", s.replace('"', "\"\""));
                    }
                    Cell::Text(s) => out.push_str(s),
                }
            }
            out.push('\n');
        }
        out
    }
}

#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => {
        vec![$($crate::output::Cell::from($x)),*]
    };
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn csv(name: &str, table: &Table) -> Self {
        Self { name: name.to_string(), bytes: table.render().into_bytes() }
    }

    pub fn json(name: &str, value: &impl Serialize) -> Self {
        let mut bytes = serde_json::to_vec_pretty(value).expect("artifact serializes");
        bytes.push(b'\n');
        Self { name: name.to_string(), bytes }
    }

    pub fn text(name: &str, text: String) -> Self {
        Self { name: name.to_string(), bytes: text.into_bytes() }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArtifactEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub schema: &'static str,
    pub schema_version: u32,
    pub artifact_version: &'static str,
    pub subcommand: String,
    /// SHA-256 of the echoed `config.toml`.
    pub config_hash: String,
    pub seed: u64,
    /// Wall time is kept out of the manifest so reruns stay byte-identical.
    pub wall_time_file: &'static str,
    pub checks: Vec<CheckResult>,
    pub artifacts: Vec<ArtifactEntry>,
}

impl RunManifest {
    pub fn new(subcommand: &str, config_toml: &str, seed: u64, checks: Vec<CheckResult>, artifacts: &[Artifact]) -> Self {
        Self {
            schema: MANIFEST_SCHEMA,
            schema_version: MANIFEST_VERSION,
            artifact_version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            config_hash: sha256_hex(config_toml.as_bytes()),
            seed,
            wall_time_file: TIMING_FILE,
            checks,
            artifacts: artifacts
                .iter()
                .map(|a| ArtifactEntry { name: a.name.clone(), sha256: sha256_hex(&a.bytes), bytes: a.bytes.len() })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub wall_time_seconds: f64,
    pub workers: usize,
}

/// Write every artifact into `dir`. Files go to a staging directory first
/// and are renamed into place, so an interrupted write leaves the previous
/// contents (or nothing) rather than a partial set.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> std::io::Result<Vec<PathBuf>> {
    let parent = dir.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(parent)?;
    let stem = dir.file_name().and_then(|s| s.to_str()).unwrap_or("run");
    let staging = parent.join(format!(".{stem}.staging-{}", std::process::id()));
    if staging.exists() {
        std::fs::remove_dir_all(&staging)?;
    }
    std::fs::create_dir_all(&staging)?;
    let result = (|| {
        for a in artifacts {
            std::fs::write(staging.join(&a.name), &a.bytes)?;
        }
        std::fs::create_dir_all(dir)?;
        let mut paths = Vec::with_capacity(artifacts.len());
        for a in artifacts {
            let target = dir.join(&a.name);
            std::fs::rename(staging.join(&a.name), &target)?;
            paths.push(target);
        }
        Ok(paths)
    })();
    let _ = std::fs::remove_dir_all(&staging);
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0, f64::MIN_POSITIVE] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(f64::NAN), "nan");
    }

    #[test]
    fn table_rendering() {
        let mut t = Table::new(&["k", "mu", "label"]);
        t.push(row![1usize, 0.5, "a,b"]);
        assert_eq!(t.render(), "k,mu,label\n1,5.0000000000000000e-1,\"a,b\"\n");
    }

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
