//! Preset data sets behind the `reproduce` command.
//!
//! Every preset uses the same reference segment: 31 cavities delimited by
//! boundary hops of 0.01 in units of the chain hopping, probed around the
//! fourth standing-wave mode at k = π/8. The presets deliberately ignore the
//! physics flags so each figure number always regenerates the same files.

use crate::output::{scan_rows, write_csv, SCAN_HEADER};
use crate::CliError;
use std::path::{Path, PathBuf};
use supercavity::{
    build_tla, scan, single_channel_scatter, tla_scan, uniform_grid, ScanMethod, SystemParams,
    TlaChannel,
};

const N_CAVITIES: usize = 31;
const ETA: f64 = 0.01;
/// Angle of the fourth standing-wave mode, π/8.
const THETA_4: f64 = std::f64::consts::PI / 8.0;
/// Mode index the atomic presets are tuned to.
const MODE: usize = 4;
/// Atom frequency used by the resonant presets: the bare fourth-mode
/// frequency 2 cos(π/8) plus 1.69e-6, which cancels the small downward pull
/// the boundary couplings exert on the resonance.
const OMEGA_COMPENSATED: f64 = 1.847760755;
/// Site where the fourth mode has an antinode (|sin(12π/8)| = 1).
const ANTINODE_SITE: usize = 12;
/// Site where the fourth mode has a node (sin(8π/8) = 0).
const NODE_SITE: usize = 8;

/// Width and sampling of the wide windows that resolve a full Rabi doublet.
const WIDE_WINDOW: f64 = 0.06;
const WIDE_SAMPLES: usize = 100_001;
/// Width and sampling of the narrow windows that resolve the bare-mode
/// linewidth (about 1e-6 in k for the fourth mode).
const NARROW_WINDOW: f64 = 2e-5;
const NARROW_SAMPLES: usize = 20_001;

fn empty_params() -> Result<SystemParams, CliError> {
    Ok(SystemParams::empty(N_CAVITIES, ETA)?)
}

fn atom_params(site: usize, omega_a: f64, g: f64) -> Result<SystemParams, CliError> {
    Ok(SystemParams::with_atom(N_CAVITIES, ETA, site, omega_a, g)?)
}

fn write_scan_csv(dir: &Path, name: &str, rows: &[[f64; 4]]) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    write_csv(&path, SCAN_HEADER, rows)?;
    Ok(path)
}

/// Five narrow windows, one per low-order mode, concatenated in ascending k.
/// Each window is ±5e-5 around the bare angle with a 5e-9 step, fine enough
/// for the narrowest (m = 1) resonance whose full width is about 1.2e-7.
fn figure2(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let params = empty_params()?;
    let mut rows = Vec::new();
    for m in 1..=5 {
        let theta = params.mode_angle(m)?;
        let scan = scan(
            &params,
            theta - 5e-5,
            theta + 5e-5,
            NARROW_SAMPLES,
            ScanMethod::ClosedForm,
        )?;
        rows.extend(scan_rows(&scan));
    }
    Ok(vec![write_scan_csv(dir, "fig2.csv", &rows)?])
}

/// Atom on resonance with mode four: a wide window at an antinode site shows
/// the Rabi doublet, a narrow window at a node site shows the unsplit peak
/// with its transmission zero.
fn figure3(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let g = 0.1;
    let antinode = atom_params(ANTINODE_SITE, OMEGA_COMPENSATED, g)?;
    let scan_a = scan(
        &antinode,
        THETA_4 - WIDE_WINDOW,
        THETA_4 + WIDE_WINDOW,
        WIDE_SAMPLES,
        ScanMethod::ClosedForm,
    )?;
    let node = atom_params(NODE_SITE, OMEGA_COMPENSATED, g)?;
    let scan_b = scan(
        &node,
        THETA_4 - 2e-4,
        THETA_4 + 2e-4,
        WIDE_SAMPLES,
        ScanMethod::ClosedForm,
    )?;
    Ok(vec![
        write_scan_csv(dir, "fig3a.csv", &scan_rows(&scan_a))?,
        write_scan_csv(dir, "fig3b.csv", &scan_rows(&scan_b))?,
    ])
}

/// Node-site coupling sweep: the transmission dip deepens and widens with g
/// while the peak stays unsplit.
fn figure4(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    for (name, g) in [
        ("fig4_g000.csv", 0.0),
        ("fig4_g005.csv", 0.05),
        ("fig4_g010.csv", 0.1),
    ] {
        let params = atom_params(NODE_SITE, OMEGA_COMPENSATED, g)?;
        let scan = scan(
            &params,
            THETA_4 - NARROW_WINDOW,
            THETA_4 + NARROW_WINDOW,
            NARROW_SAMPLES,
            ScanMethod::ClosedForm,
        )?;
        written.push(write_scan_csv(dir, name, &scan_rows(&scan))?);
    }
    Ok(written)
}

/// Detuning sweep at an antinode site: the doublet becomes asymmetric, the
/// branch closer to the atom frequency shifting the most.
fn figure5(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let nu_4 = 2.0 * THETA_4.cos();
    let mut written = Vec::new();
    for (name, detuning) in [
        ("fig5_d000.csv", 0.0),
        ("fig5_d001.csv", 0.01),
        ("fig5_d002.csv", 0.02),
    ] {
        let params = atom_params(ANTINODE_SITE, nu_4 + detuning, 0.1)?;
        let scan = scan(
            &params,
            THETA_4 - WIDE_WINDOW,
            THETA_4 + WIDE_WINDOW,
            WIDE_SAMPLES,
            ScanMethod::ClosedForm,
        )?;
        written.push(write_scan_csv(dir, name, &scan_rows(&scan))?);
    }
    Ok(written)
}

/// Full solver against the reduced two-level model at a node site, g = 0.05.
fn figure6(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    two_level_pair(dir, 0.05, "fig6_exact.csv", "fig6_tla.csv")
}

/// Channel decomposition at a node site, g = 0.1: the surviving-mode channel
/// alone, the dressed-atom channel alone, then both together against the
/// full solver.
fn figure7(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let g = 0.1;
    let params = atom_params(NODE_SITE, OMEGA_COMPENSATED, g)?;
    let tlm = build_tla(&params, MODE)?;
    let grid = uniform_grid(
        THETA_4 - NARROW_WINDOW,
        THETA_4 + NARROW_WINDOW,
        NARROW_SAMPLES,
    )?;
    let mut mode_rows = Vec::with_capacity(grid.len());
    let mut atom_rows = Vec::with_capacity(grid.len());
    for &k in &grid {
        let energy = params.dispersion(k)?;
        let mode_sol = single_channel_scatter(&params, &tlm, TlaChannel::Mode, k)?;
        let atom_sol = single_channel_scatter(&params, &tlm, TlaChannel::Atom, k)?;
        mode_rows.push([k, energy, mode_sol.transmission, mode_sol.reflection]);
        atom_rows.push([k, energy, atom_sol.transmission, atom_sol.reflection]);
    }
    let mut written = vec![
        write_scan_csv(dir, "fig7a_mode.csv", &mode_rows)?,
        write_scan_csv(dir, "fig7a_atom.csv", &atom_rows)?,
    ];
    written.extend(two_level_pair(dir, g, "fig7b_exact.csv", "fig7b_tla.csv")?);
    Ok(written)
}

fn two_level_pair(
    dir: &Path,
    g: f64,
    exact_name: &str,
    tla_name: &str,
) -> Result<Vec<PathBuf>, CliError> {
    let params = atom_params(NODE_SITE, OMEGA_COMPENSATED, g)?;
    let tlm = build_tla(&params, MODE)?;
    let lo = THETA_4 - NARROW_WINDOW;
    let hi = THETA_4 + NARROW_WINDOW;
    let exact = scan(&params, lo, hi, NARROW_SAMPLES, ScanMethod::ClosedForm)?;
    let reduced = tla_scan(&params, &tlm, lo, hi, NARROW_SAMPLES)?;
    Ok(vec![
        write_scan_csv(dir, exact_name, &scan_rows(&exact))?,
        write_scan_csv(dir, tla_name, &scan_rows(&reduced))?,
    ])
}

/// Regenerate the preset files for one figure; returns the paths written.
pub fn reproduce(figure: u32, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    match figure {
        2 => figure2(dir),
        3 => figure3(dir),
        4 => figure4(dir),
        5 => figure5(dir),
        6 => figure6(dir),
        7 => figure7(dir),
        _ => unreachable!("figure range validated by the caller"),
    }
}
