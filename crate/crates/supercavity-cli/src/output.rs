//! Deterministic CSV and JSON writers.
//!
//! Floating-point values are printed with `{:.16e}` (17 significant digits),
//! which round-trips every finite f64 exactly, so identical runs produce
//! byte-identical files.

use crate::config::ConfigSnapshot;
use crate::CliError;
use serde_json::{json, Value};
use std::io::Write;
use std::path::Path;
use supercavity::{Peak, SpectrumScan, Valley};

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Config(format!("cannot write {}: {e}", path.display()))
}

/// Write a CSV file with the given header line and four-column float rows.
pub fn write_csv(path: &Path, header: &str, rows: &[[f64; 4]]) -> Result<(), CliError> {
    let mut buf = String::with_capacity(rows.len() * 100 + header.len() + 1);
    buf.push_str(header);
    buf.push('\n');
    for row in rows {
        buf.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e}\n",
            row[0], row[1], row[2], row[3]
        ));
    }
    let mut file = std::fs::File::create(path).map_err(|e| io_error(path, e))?;
    file.write_all(buf.as_bytes()).map_err(|e| io_error(path, e))
}

/// Rows `k, E, T, R` for a spectrum scan.
pub fn scan_rows(scan: &SpectrumScan) -> Vec<[f64; 4]> {
    let energies = scan.energies();
    scan.k_grid
        .iter()
        .zip(energies.iter())
        .zip(scan.transmission.iter().zip(scan.reflection.iter()))
        .map(|((&k, &e), (&t, &r))| [k, e, t, r])
        .collect()
}

pub const SCAN_HEADER: &str = "k,E,T,R";

/// Write the JSON document shared by all commands: effective configuration,
/// scan arrays, and a command-specific analysis object.
pub fn write_json(
    path: &Path,
    snapshot: &ConfigSnapshot,
    grid: &[f64],
    transmission: &[f64],
    reflection: &[f64],
    analysis: Value,
) -> Result<(), CliError> {
    let doc = json!({
        "config": snapshot,
        "grid": grid,
        "T": transmission,
        "R": reflection,
        "analysis": analysis,
    });
    let mut text = serde_json::to_string_pretty(&doc)
        .map_err(|e| CliError::Config(format!("cannot serialize JSON: {e}")))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

pub fn peak_json(peak: &Peak) -> Value {
    json!({
        "k_center": peak.k_center,
        "e_center": peak.e_center,
        "t_max": peak.t_max,
        "fwhm_k": peak.fwhm_k,
        "fwhm_e": peak.fwhm_e,
        "under_resolved": peak.under_resolved,
    })
}

pub fn valley_json(valley: &Valley) -> Value {
    json!({
        "k_center": valley.k_center,
        "t_min": valley.t_min,
        "width_k": valley.width_k,
    })
}
