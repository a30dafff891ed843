//! Command execution: each subcommand runs the library and hands rows or a
//! JSON document to the writers in `output`.

use crate::config::{OutputFormat, Resolved};
use crate::output::{
    peak_json, scan_rows, valley_json, write_csv, write_json, SCAN_HEADER,
};
use crate::{CliError, Command};
use serde_json::json;
use supercavity::{
    build_tla, compare_scans, find_peaks, measure_splitting, scan, tla_scan, SpectrumScan,
};

/// Smallest gap kept between a scan window edge and the band edges at 0 and π.
const EDGE_GUARD: f64 = 1e-9;

fn clamped_window(theta: f64, window: f64) -> (f64, f64) {
    let lo = (theta - window).max(EDGE_GUARD);
    let hi = (theta + window).min(std::f64::consts::PI - EDGE_GUARD);
    (lo, hi)
}

pub fn execute(resolved: &Resolved) -> Result<(), CliError> {
    match resolved.command {
        Command::Spectrum => spectrum(resolved),
        Command::Modes => modes(resolved),
        Command::Rabi => rabi(resolved),
        Command::Valley => valley(resolved),
        Command::TlaCompare => tla_compare(resolved),
        Command::Reproduce => reproduce(resolved),
    }
}

fn emit_scan(
    resolved: &Resolved,
    scan: &SpectrumScan,
    analysis: serde_json::Value,
) -> Result<(), CliError> {
    match resolved.format {
        OutputFormat::Csv => write_csv(&resolved.out, SCAN_HEADER, &scan_rows(scan)),
        OutputFormat::Json => write_json(
            &resolved.out,
            &resolved.snapshot,
            &scan.k_grid,
            &scan.transmission,
            &scan.reflection,
            analysis,
        ),
    }
}

/// Transmission/reflection over the requested grid, with extracted peaks and
/// valleys in the JSON analysis block.
fn spectrum(resolved: &Resolved) -> Result<(), CliError> {
    let scan = scan(
        &resolved.params,
        resolved.k_min,
        resolved.k_max,
        resolved.samples,
        resolved.method,
    )?;
    let report = find_peaks(&scan, resolved.threshold)?;
    let analysis = json!({
        "peaks": report.peaks.iter().map(peak_json).collect::<Vec<_>>(),
        "valleys": report.valleys.iter().map(valley_json).collect::<Vec<_>>(),
    });
    emit_scan(resolved, &scan, analysis)
}

/// Standing-wave mode table: angle, frequency, and atom coupling per mode.
fn modes(resolved: &Resolved) -> Result<(), CliError> {
    let params = &resolved.params;
    let n = params.n_cavities();
    let mut rows = Vec::with_capacity(n);
    for m in 1..=n {
        let theta = params.mode_angle(m)?;
        let (nu, _) = params.empty_mode(m)?;
        let g_m = if params.atom().is_some() {
            params.mode_coupling(m)?
        } else {
            0.0
        };
        rows.push([m as f64, theta, nu, g_m]);
    }
    match resolved.format {
        OutputFormat::Csv => write_csv(&resolved.out, "m,theta,nu,g_m", &rows),
        OutputFormat::Json => {
            let modes = rows
                .iter()
                .map(|row| {
                    json!({
                        "m": row[0] as usize,
                        "theta": row[1],
                        "nu": row[2],
                        "g_m": row[3],
                    })
                })
                .collect::<Vec<_>>();
            write_json(
                &resolved.out,
                &resolved.snapshot,
                &[],
                &[],
                &[],
                json!({ "modes": modes }),
            )
        }
    }
}

/// Scan a window around the selected mode and measure the two dominant peaks.
fn rabi(resolved: &Resolved) -> Result<(), CliError> {
    let theta = resolved.params.mode_angle(resolved.mode)?;
    let (lo, hi) = clamped_window(theta, resolved.window);
    let scan = scan(
        &resolved.params,
        lo,
        hi,
        resolved.samples,
        resolved.method,
    )?;
    let splitting = measure_splitting(
        &resolved.params,
        resolved.mode,
        resolved.window,
        resolved.samples,
    )?;
    let analysis = json!({
        "delta_e": splitting.delta_e,
        "lower": peak_json(&splitting.lower),
        "upper": peak_json(&splitting.upper),
    });
    emit_scan(resolved, &scan, analysis)
}

/// Scan a window around the selected mode and report the full peak/valley
/// structure, including transmission minima.
fn valley(resolved: &Resolved) -> Result<(), CliError> {
    let theta = resolved.params.mode_angle(resolved.mode)?;
    let (lo, hi) = clamped_window(theta, resolved.window);
    let scan = scan(
        &resolved.params,
        lo,
        hi,
        resolved.samples,
        resolved.method,
    )?;
    let report = find_peaks(&scan, resolved.threshold)?;
    let analysis = json!({
        "threshold": report.threshold,
        "peaks": report.peaks.iter().map(peak_json).collect::<Vec<_>>(),
        "valleys": report.valleys.iter().map(valley_json).collect::<Vec<_>>(),
    });
    emit_scan(resolved, &scan, analysis)
}

/// Run the full solver and the reduced two-level model over the same window
/// and report their difference. CSV rows hold the reduced-model spectrum; the
/// JSON document holds the full spectrum with the reduced arrays and error
/// metrics in the analysis block.
fn tla_compare(resolved: &Resolved) -> Result<(), CliError> {
    let params = &resolved.params;
    let tlm = build_tla(params, resolved.mode)?;
    let theta = params.mode_angle(resolved.mode)?;
    let (lo, hi) = clamped_window(theta, resolved.window);
    let exact = scan(params, lo, hi, resolved.samples, resolved.method)?;
    let reduced = tla_scan(params, &tlm, lo, hi, resolved.samples)?;
    let (max_abs_diff, rms_diff) = compare_scans(&exact, &reduced)?;
    match resolved.format {
        OutputFormat::Csv => write_csv(&resolved.out, SCAN_HEADER, &scan_rows(&reduced)),
        OutputFormat::Json => {
            let analysis = json!({
                "tla_T": reduced.transmission,
                "tla_R": reduced.reflection,
                "max_abs_diff": max_abs_diff,
                "rms_diff": rms_diff,
            });
            write_json(
                &resolved.out,
                &resolved.snapshot,
                &exact.k_grid,
                &exact.transmission,
                &exact.reflection,
                analysis,
            )
        }
    }
}

/// Write the preset data sets for one published figure into the output
/// directory.
fn reproduce(resolved: &Resolved) -> Result<(), CliError> {
    let figure = resolved.figure.ok_or_else(|| {
        CliError::Config("reproduce requires --figure (2 through 7)".into())
    })?;
    if !(2..=7).contains(&figure) {
        return Err(CliError::Config(format!(
            "no preset for figure {figure}; available figures are 2 through 7"
        )));
    }
    if resolved.format != OutputFormat::Csv {
        return Err(CliError::Config(
            "reproduce writes fixed CSV data sets; use --format csv".into(),
        ));
    }
    std::fs::create_dir_all(&resolved.out).map_err(|e| {
        CliError::Config(format!(
            "cannot create output directory {}: {e}",
            resolved.out.display()
        ))
    })?;
    let written = crate::figures::reproduce(figure, &resolved.out)?;
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}
