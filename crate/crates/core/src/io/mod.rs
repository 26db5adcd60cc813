//! Files in and out: instances, LP export, reports.

pub mod instance;
pub mod lp;
pub mod report;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

pub use instance::{instance_to_string, parse_instance, read_instance, write_instance};
pub use lp::{export_mip_lp, mip_lp_string, LpModel};
pub use report::{adjusted_gap, write_report, ReportFormat, ReportRow};

/// Writes `bytes` next to `path` and renames into place, so readers never
/// see a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::validation("path", format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = fs::File::create(&tmp)
        .and_then(|mut f| {
            f.write_all(bytes)?;
            f.sync_all()
        })
        .and_then(|_| fs::rename(&tmp, path));
    result.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// Pretty JSON, written atomically.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Numeric(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Reads a price vector stored as a JSON array of numbers.
pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| json_error(path, &e))
}

pub(crate) fn json_error(path: &Path, e: &serde_json::Error) -> Error {
    Error::Parse {
        location: format!("{}:{}:{}", path.display(), e.line(), e.column()),
        message: e.to_string(),
    }
}

/// Shortest decimal that reads back to the same `f64`.
pub(crate) fn fmt_f64(x: f64) -> String {
    serde_json::Number::from_f64(x).map_or_else(|| x.to_string(), |n| n.to_string())
}
