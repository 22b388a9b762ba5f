use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{Error, Result};

/// One CSV line per result with a fixed header per experiment kind.
pub trait CsvRow {
    const HEADER: &'static str;
    fn row(&self) -> String;
}

/// Shortest round-trip form, switching to exponent notation for very small
/// or very large magnitudes.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn to_csv<T: CsvRow>(rows: &[T]) -> String {
    let mut out = String::from(T::HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.row());
        out.push('\n');
    }
    out
}

/// Env var that pins the report timestamp, in seconds since the epoch.
pub const SOURCE_DATE_EPOCH: &str = "SOURCE_DATE_EPOCH";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl RunMetadata {
    pub fn new(seed: u64, timestamp: u64) -> Self {
        RunMetadata {
            seed,
            version: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).to_string(),
            timestamp,
        }
    }
}

/// `explicit`, else `SOURCE_DATE_EPOCH`, else the current time.
pub fn resolve_timestamp(explicit: Option<u64>) -> u64 {
    explicit
        .or_else(|| {
            std::env::var(SOURCE_DATE_EPOCH)
                .ok()
                .and_then(|v| v.trim().parse().ok())
        })
        .unwrap_or_else(|| {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        })
}

/// Rendered outcome of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub name: String,
    pub csv: String,
    pub results: Value,
    pub pass: bool,
}

impl Report {
    pub fn summary(&self, config: &Value, meta: &RunMetadata) -> Value {
        serde_json::json!({
            "experiment": self.name,
            "pass": self.pass,
            "results": self.results,
            "config": config,
            "run": meta,
        })
    }

    /// Write `<name>.csv` and `<name>.json` into `dir`.
    pub fn write(&self, dir: &Path, config: &Value, meta: &RunMetadata) -> Result<Vec<PathBuf>> {
        let csv_path = dir.join(format!("{}.csv", self.name));
        let json_path = dir.join(format!("{}.json", self.name));
        write_file(&csv_path, self.csv.as_bytes())?;
        let mut json = serde_json::to_string_pretty(&self.summary(config, meta))?;
        json.push('\n');
        write_file(&json_path, json.as_bytes())?;
        Ok(vec![csv_path, json_path])
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|source| Error::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
    }
    std::fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
