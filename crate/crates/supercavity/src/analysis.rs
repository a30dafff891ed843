//! Spectral post-processing: peak and valley detection with sub-grid
//! refinement, linewidths, measured Rabi splittings, detuning sweeps, and
//! scan-against-scan comparison metrics.

use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::scatter::{scan, ScanMethod, SpectrumScan};

/// Default transmission threshold below which local maxima are ignored as
/// ripple.
pub const DEFAULT_PEAK_THRESHOLD: f64 = 0.1;

/// Smallest `|sin(n theta_m)|` still treated as an antinode placement for
/// detuning sweeps.
const ANTINODE_MIN: f64 = 0.9;

/// Window half-width (in k) and sample count used by [`detuning_sweep`];
/// sized so Rabi pairs up to a few percent of the band stay inside the
/// window while neighboring segment modes stay out.
const SWEEP_WINDOW: f64 = 0.06;
const SWEEP_SAMPLES: usize = 48_001;

/// One resolved transmission maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct Peak {
    /// Sub-grid refined wave vector of the maximum.
    pub k_center: f64,
    /// Probe energy at `k_center` via the dispersion relation.
    pub e_center: f64,
    /// Refined height.
    pub t_max: f64,
    /// Full width at half maximum in k.
    pub fwhm_k: f64,
    /// Full width at half maximum mapped to energy.
    pub fwhm_e: f64,
    /// Set when the grid is too coarse to trust the width (fewer than three
    /// samples above half maximum, or a missing half-max crossing).
    pub under_resolved: bool,
}

/// One resolved transmission minimum bracketed by shoulders at least twice
/// its depth.
#[derive(Debug, Clone, PartialEq)]
pub struct Valley {
    /// Sub-grid refined wave vector of the minimum.
    pub k_center: f64,
    /// Refined floor value.
    pub t_min: f64,
    /// Width in k at half depth between the floor and the lower shoulder.
    pub width_k: f64,
}

/// Peaks and valleys of one scan, with the grid metadata they were
/// extracted from.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakReport {
    /// Maxima above the threshold, sorted by `k_center`.
    pub peaks: Vec<Peak>,
    /// Minima with genuine shoulders, sorted by `k_center`.
    pub valleys: Vec<Valley>,
    /// Detection threshold the report was built with.
    pub threshold: f64,
    /// Number of grid samples analyzed.
    pub samples: usize,
    /// First grid wave vector.
    pub k_min: f64,
    /// Last grid wave vector.
    pub k_max: f64,
}

/// A measured two-peak splitting, ordered by energy.
#[derive(Debug, Clone, PartialEq)]
pub struct Splitting {
    /// Energy separation of the two dominant peaks.
    pub delta_e: f64,
    /// Dominant peak at lower energy (larger k).
    pub lower: Peak,
    /// Dominant peak at higher energy (smaller k).
    pub upper: Peak,
}

/// Peak pair at one atom detuning, with shifts relative to the resonant
/// (zero-detuning) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DetuningPoint {
    /// Atom detuning from the bare mode.
    pub detuning: f64,
    /// Lower-energy peak.
    pub lower: Peak,
    /// Higher-energy peak.
    pub upper: Peak,
    /// `lower.e_center` minus its zero-detuning position.
    pub lower_shift: f64,
    /// `upper.e_center` minus its zero-detuning position.
    pub upper_shift: f64,
}

/// Vertex of the parabola through three equally spaced samples; returns the
/// offset from the middle abscissa and the extremal value.
fn quadratic_vertex(h: f64, y0: f64, y1: f64, y2: f64) -> (f64, f64) {
    let denom = y0 - 2.0 * y1 + y2;
    if denom == 0.0 {
        return (0.0, y1);
    }
    let offset = 0.5 * h * (y0 - y2) / denom;
    let value = y1 - (y0 - y2).powi(2) / (8.0 * denom);
    (offset, value)
}

/// Linear interpolation of the k where `t` crosses `level` between adjacent
/// samples `j` and `j+1`.
fn cross_k(k: &[f64], t: &[f64], j: usize, level: f64) -> f64 {
    let (t0, t1) = (t[j], t[j + 1]);
    if t1 == t0 {
        return 0.5 * (k[j] + k[j + 1]);
    }
    k[j] + (level - t0) / (t1 - t0) * (k[j + 1] - k[j])
}

/// Finds transmission maxima above `threshold` and minima with genuine
/// shoulders in `scan`.
///
/// Each extremum is refined by a three-point parabola. Peak widths are full
/// widths at half maximum from linearly interpolated crossings on the two
/// monotone flanks; when a flank ends (at a neighboring valley or the grid
/// edge) before crossing, the peak is flagged under-resolved and the width
/// falls back to the available information. Valleys must be bracketed by
/// samples at least twice their floor; their width is taken at half depth.
pub fn find_peaks(spectrum: &SpectrumScan, threshold: f64) -> Result<PeakReport> {
    if spectrum.is_empty() {
        return Err(Error::Domain("cannot analyze an empty scan".into()));
    }
    if !threshold.is_finite() || threshold < 0.0 {
        return Err(Error::Domain(format!(
            "peak threshold must be finite and non-negative, got {threshold}"
        )));
    }
    let k = &spectrum.k_grid;
    let t = &spectrum.transmission;
    let n = k.len();

    let mut peaks = Vec::new();
    let mut valleys = Vec::new();
    for i in 1..n.saturating_sub(1) {
        if t[i] > t[i - 1] && t[i] > t[i + 1] {
            let h = 0.5 * (k[i + 1] - k[i - 1]);
            let (offset, t_max) = quadratic_vertex(h, t[i - 1], t[i], t[i + 1]);
            if t_max <= threshold {
                continue;
            }
            let k_center = k[i] + offset;
            let half = 0.5 * t_max;

            // Walk each monotone flank until it crosses half maximum.
            let mut left_cross = None;
            let mut j = i;
            while j > 0 && t[j - 1] < t[j] {
                if t[j - 1] <= half {
                    left_cross = Some(cross_k(k, t, j - 1, half));
                    break;
                }
                j -= 1;
            }
            let left_end = j;
            let mut right_cross = None;
            j = i;
            while j + 1 < n && t[j + 1] < t[j] {
                if t[j + 1] <= half {
                    right_cross = Some(cross_k(k, t, j, half));
                    break;
                }
                j += 1;
            }
            let right_end = j;

            let span = right_end - left_end + 1;
            let mut under_resolved = span < 3;
            let fwhm_k = match (left_cross, right_cross) {
                (Some(l), Some(r)) => r - l,
                (Some(l), None) => {
                    under_resolved = true;
                    2.0 * (k_center - l)
                }
                (None, Some(r)) => {
                    under_resolved = true;
                    2.0 * (r - k_center)
                }
                (None, None) => {
                    under_resolved = true;
                    k[i + 1] - k[i - 1]
                }
            };
            let e_center = spectrum.params.dispersion(k_center)?;
            // Map the width to energy through the crossings when both are
            // available, otherwise linearize with the local group slope.
            let fwhm_e = match (left_cross, right_cross) {
                (Some(l), Some(r)) => {
                    (spectrum.params.dispersion(l)? - spectrum.params.dispersion(r)?).abs()
                }
                _ => fwhm_k * 2.0 * spectrum.params.xi() * k_center.sin(),
            };
            peaks.push(Peak {
                k_center,
                e_center,
                t_max,
                fwhm_k,
                fwhm_e,
                under_resolved,
            });
        } else if t[i] < t[i - 1] && t[i] < t[i + 1] {
            let h = 0.5 * (k[i + 1] - k[i - 1]);
            let (offset, raw_min) = quadratic_vertex(h, t[i - 1], t[i], t[i + 1]);
            let t_min = raw_min.max(0.0);
            let k_center = k[i] + offset;

            // Shoulders: walk each rising flank to its local top.
            let mut l = i;
            while l > 0 && t[l - 1] > t[l] {
                l -= 1;
            }
            let mut r = i;
            while r + 1 < n && t[r + 1] > t[r] {
                r += 1;
            }
            let ceiling = t[l].min(t[r]);
            if ceiling < 2.0 * t_min {
                continue;
            }
            // Half depth toward the lower shoulder; both flanks are monotone
            // up to their shoulders, so the crossings exist.
            let level = t_min + 0.5 * (ceiling - t_min);
            let mut j = i;
            let mut left = k[l];
            while j > l {
                if t[j - 1] >= level {
                    left = cross_k(k, t, j - 1, level);
                    break;
                }
                j -= 1;
            }
            j = i;
            let mut right = k[r];
            while j < r {
                if t[j + 1] >= level {
                    right = cross_k(k, t, j, level);
                    break;
                }
                j += 1;
            }
            valleys.push(Valley {
                k_center,
                t_min,
                width_k: right - left,
            });
        }
    }

    Ok(PeakReport {
        peaks,
        valleys,
        threshold,
        samples: n,
        k_min: k[0],
        k_max: k[n - 1],
    })
}

/// Scans a window of half-width `window` around the angle of mode `m` and
/// measures the energy separation of the two dominant peaks.
pub fn measure_splitting(
    params: &SystemParams,
    m: usize,
    window: f64,
    samples: usize,
) -> Result<Splitting> {
    if params.atom().is_none() {
        return Err(Error::NoAtom);
    }
    if !(window.is_finite() && window > 0.0) {
        return Err(Error::Domain(format!(
            "splitting window must be positive, got {window}"
        )));
    }
    let theta = params.mode_angle(m)?;
    let margin = 1e-9;
    let k_lo = (theta - window).max(margin);
    let k_hi = (theta + window).min(std::f64::consts::PI - margin);
    let spectrum = scan(params, k_lo, k_hi, samples, ScanMethod::ClosedForm)?;
    let report = find_peaks(&spectrum, DEFAULT_PEAK_THRESHOLD)?;
    if report.peaks.len() < 2 {
        return Err(Error::SplittingNotResolved {
            found: report.peaks.len(),
            threshold: DEFAULT_PEAK_THRESHOLD,
        });
    }
    let mut ranked: Vec<&Peak> = report.peaks.iter().collect();
    ranked.sort_by(|a, b| b.t_max.total_cmp(&a.t_max));
    let (a, b) = (ranked[0], ranked[1]);
    // Dispersion falls with k, so the larger-k peak sits lower in energy.
    let (lower, upper) = if a.k_center > b.k_center {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    };
    Ok(Splitting {
        delta_e: upper.e_center - lower.e_center,
        lower,
        upper,
    })
}

/// Measures the dominant peak pair at each atom detuning from mode `m` and
/// reports the peak shifts relative to the resonant pair.
///
/// The atom must sit at (or near) an antinode of mode `m`, where the
/// two-peak structure exists for every small detuning.
pub fn detuning_sweep(
    params: &SystemParams,
    m: usize,
    detunings: &[f64],
) -> Result<Vec<DetuningPoint>> {
    let atom = params.atom().ok_or(Error::NoAtom)?;
    let theta = params.mode_angle(m)?;
    let profile = (atom.site as f64 * theta).sin().abs();
    if profile < ANTINODE_MIN {
        return Err(Error::Domain(format!(
            "detuning sweep needs the atom at an antinode of mode {m} \
             (|sin(n theta)| = {profile:.3} < {ANTINODE_MIN})"
        )));
    }
    let nu_m = params.empty_mode(m)?.0;

    let measure = |delta: f64| -> Result<Splitting> {
        let retuned = params.clone().retuned_atom(nu_m + delta)?;
        measure_splitting(&retuned, m, SWEEP_WINDOW, SWEEP_SAMPLES)
    };
    let baseline = measure(0.0)?;

    detunings
        .iter()
        .map(|&delta| {
            let pair = measure(delta)?;
            Ok(DetuningPoint {
                detuning: delta,
                lower_shift: pair.lower.e_center - baseline.lower.e_center,
                upper_shift: pair.upper.e_center - baseline.upper.e_center,
                lower: pair.lower,
                upper: pair.upper,
            })
        })
        .collect()
}

/// Pointwise transmission difference between two scans on the same grid:
/// `(max_abs_diff, rms_diff)`.
pub fn compare_scans(a: &SpectrumScan, b: &SpectrumScan) -> Result<(f64, f64)> {
    if a.k_grid != b.k_grid {
        return Err(Error::GridMismatch);
    }
    let mut max_abs = 0.0_f64;
    let mut sum_sq = 0.0;
    for (ta, tb) in a.transmission.iter().zip(&b.transmission) {
        let d = (ta - tb).abs();
        max_abs = max_abs.max(d);
        sum_sq += d * d;
    }
    let rms = (sum_sq / a.transmission.len() as f64).sqrt();
    Ok((max_abs, rms))
}
