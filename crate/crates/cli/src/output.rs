//! Deterministic output formatting: 9-significant-digit floats (decimal in
//! a sane range, scientific outside it) and provenance-stamped files. No
//! timing or thread-count information ever reaches an output file, so runs
//! are byte-comparable.

use serde::Serialize;
use std::fs;
use std::path::Path;

use crate::CliError;

/// Format with 9 significant digits; stable under reruns by construction.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..=8).contains(&mag) {
        let decimals = (8 - mag).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.8e}")
    }
}

/// Write a CSV with the exact header row given and formatted float cells.
pub fn write_csv(
    path: &Path,
    header: &str,
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<(), CliError> {
    let mut text = String::from(header);
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Validation(format!("serialization: {e}")))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Run provenance written next to every command's outputs.
#[derive(Serialize)]
pub struct RunRecord<'a> {
    pub command: &'a str,
    pub master_seed: u64,
    pub config_sha256: &'a str,
    pub outputs: Vec<String>,
}
