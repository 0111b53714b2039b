use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

/// One asserted invariant with its measured value.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    /// Bound the value was compared against, when there is one.
    pub limit: Option<f64>,
    pub detail: String,
}

impl Check {
    /// Passes when `value <= limit`.
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= limit,
            value,
            limit: Some(limit),
            detail: format!("{value:e} <= {limit:e}"),
        }
    }

    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            passed: value >= limit,
            value,
            limit: Some(limit),
            detail: format!("{value:e} >= {limit:e}"),
        }
    }

    pub fn flag(name: &str, passed: bool, value: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            value,
            limit: None,
            detail: detail.into(),
        }
    }
}

/// `summary.json`. Keys serialize in sorted order, so equal runs give equal bytes.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub experiment: String,
    pub version: String,
    pub seed: u64,
    pub threads: usize,
    pub config: Value,
    pub results: Value,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub wall_clock_s: f64,
}

/// Keys ignored by the regression diff.
pub const VOLATILE_KEYS: &[&str] = &["wall_clock_s", "version", "threads"];

/// Collects the files of one run before they are committed to the output directory.
pub struct Outputs {
    dir: PathBuf,
    pub files: Vec<PathBuf>,
}

impl Outputs {
    pub fn new(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes through a temporary file and renames it into place.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        let target = self.path(name);
        let tmp = self.path(&format!(".{name}.tmp"));
        std::fs::write(&tmp, bytes)?;
        std::fs::rename(&tmp, &target)?;
        self.files.push(target);
        Ok(())
    }

    pub fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r).map_err(std::io::Error::other)?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        self.write(name, &bytes)
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> std::io::Result<()> {
        let v = serde_json::to_value(value).map_err(std::io::Error::other)?;
        let mut text = serde_json::to_string_pretty(&v).map_err(std::io::Error::other)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Marks a file written by another routine as part of the run.
    pub fn adopt(&mut self, name: &str) {
        self.files.push(self.path(name));
    }
}
