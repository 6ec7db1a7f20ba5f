//! On-disk formats: the embeddings container, CSV protocol files, the UI
//! model file, and evaluation report writers.
//!
//! All formats are plain and deterministic: writing the same data twice
//! produces byte-identical files. Floating-point text output uses either
//! shortest-round-trip formatting (f64 metadata) or 10-significant-digit
//! scientific notation (float32 embedding components), both of which parse
//! back to exactly the value written.

pub mod embedding_file;
pub mod protocol;
pub mod report;
pub mod ui_model;

use crate::{Error, Result};
use std::path::Path;

/// Write `key=value` lines describing a run, so every output directory
/// records how it was produced. Order is preserved as given.
pub fn write_run_config(path: &Path, entries: &[(String, String)]) -> Result<()> {
    let mut out = String::new();
    for (key, value) in entries {
        out.push_str(key);
        out.push('=');
        out.push_str(value);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Read back a `key=value` file written by [`write_run_config`].
pub fn read_run_config(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut entries = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        match line.split_once('=') {
            Some((key, value)) => entries.push((key.to_string(), value.to_string())),
            None => {
                return Err(Error::malformed(
                    path.display().to_string(),
                    idx as u64 + 1,
                    "expected key=value",
                ))
            }
        }
    }
    Ok(entries)
}
