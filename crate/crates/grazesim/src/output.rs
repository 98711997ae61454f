//! Deterministic CSV and JSON artifact writers.
//!
//! Float formatting uses the shortest round-trip representation, with
//! scientific notation outside a readable magnitude window, so output
//! bytes depend only on the computed values — never on thread count or
//! locale.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::Result;

/// Shortest round-trip formatting with a stable notation choice.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string(); // covers -0.0
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let a = v.abs();
    if (1e-4..1e7).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Write one CSV file with a header row. Fields are joined with commas;
/// callers pass already-formatted cells.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut buf = String::with_capacity(rows.len() * 64 + 128);
    buf.push_str(&header.join(","));
    buf.push('\n');
    for row in rows {
        buf.push_str(&row.join(","));
        buf.push('\n');
    }
    let mut file = fs::File::create(path)?;
    file.write_all(buf.as_bytes())?;
    Ok(())
}

/// Serialize a value as pretty JSON next to the other artifacts.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| crate::GrazeError::Config(format!("serialization failed: {e}")))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Create the output directory (and parents) and return it.
pub fn ensure_out_dir(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    Ok(dir.to_path_buf())
}
