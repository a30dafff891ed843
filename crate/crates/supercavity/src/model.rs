//! Physical model of the super cavity and its host array.
//!
//! The system is an infinite one-dimensional chain of identical cavities with
//! nearest-neighbour hopping `xi`. Two weak links of strength `eta` (between
//! sites 0/1 and N/N+1) fence off an `N`-site segment — the *super cavity* —
//! which behaves as a multi-mode resonator probed by photons travelling along
//! the rest of the chain. Optionally a two-level atom sits at one site of the
//! segment and couples to it with strength `g`.
//!
//! Everything here lives in the single-excitation sector, so states are
//! vectors over the `N` segment sites plus (optionally) the atomic excitation.
//! All frequencies are stored as offsets from a common reference; the bare
//! cavity frequency `omega_c` defaults to zero and only shifts spectra rigidly.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::numerics;

/// Above this value of `eta/xi` the super cavity is no longer weakly coupled
/// and the narrow-resonance picture degrades; construction still succeeds but
/// logs a warning.
pub const WEAK_COUPLING_LIMIT: f64 = 0.2;

/// Two-level atom embedded in the super cavity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    /// Site index inside the segment, `1..=n_cavities`.
    pub site: usize,
    /// Transition frequency (same offset convention as `omega_c`).
    pub omega_a: f64,
    /// Atom–cavity coupling strength, `>= 0`.
    pub g: f64,
}

/// Validated parameter set for one scattering geometry.
///
/// Constructors check every invariant (positive hoppings, atom site inside the
/// segment, finite values), so a `SystemParams` in hand is always usable.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    n_cavities: usize,
    omega_c: f64,
    xi: f64,
    eta: f64,
    atom: Option<Atom>,
}

impl SystemParams {
    /// Super cavity of `n_cavities` sites with boundary hopping `eta`, no
    /// atom, `omega_c = 0` and `xi = 1`.
    pub fn empty(n_cavities: usize, eta: f64) -> Result<Self> {
        let params = SystemParams {
            n_cavities,
            omega_c: 0.0,
            xi: 1.0,
            eta,
            atom: None,
        };
        params.validate()?;
        Ok(params)
    }

    /// Super cavity containing a two-level atom at `site` (1-based, counted
    /// from the left end of the segment).
    pub fn with_atom(
        n_cavities: usize,
        eta: f64,
        site: usize,
        omega_a: f64,
        g: f64,
    ) -> Result<Self> {
        let params = SystemParams {
            n_cavities,
            omega_c: 0.0,
            xi: 1.0,
            eta,
            atom: Some(Atom {
                site,
                omega_a,
                g,
            }),
        };
        params.validate()?;
        Ok(params)
    }

    /// Returns the same geometry with a different reference frequency.
    pub fn shifted_omega_c(mut self, omega_c: f64) -> Result<Self> {
        self.omega_c = omega_c;
        self.validate()?;
        Ok(self)
    }

    /// Returns the same geometry with a different bulk hopping `xi`.
    pub fn scaled_xi(mut self, xi: f64) -> Result<Self> {
        self.xi = xi;
        self.validate()?;
        Ok(self)
    }

    /// Returns the same geometry with the atomic frequency retuned.
    /// Errors when no atom is present.
    pub fn retuned_atom(mut self, omega_a: f64) -> Result<Self> {
        match self.atom.as_mut() {
            Some(atom) => atom.omega_a = omega_a,
            None => return Err(Error::NoAtom),
        }
        self.validate()?;
        Ok(self)
    }

    /// Returns the same geometry with a different atom–cavity coupling.
    /// Errors when no atom is present.
    pub fn recoupled_atom(mut self, g: f64) -> Result<Self> {
        match self.atom.as_mut() {
            Some(atom) => atom.g = g,
            None => return Err(Error::NoAtom),
        }
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.n_cavities == 0 {
            return Err(Error::InvalidParameter(
                "the super cavity needs at least one site".into(),
            ));
        }
        if !(self.xi.is_finite() && self.xi > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "bulk hopping xi must be finite and positive, got {}",
                self.xi
            )));
        }
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "boundary hopping eta must be finite and positive, got {}",
                self.eta
            )));
        }
        if !self.omega_c.is_finite() {
            return Err(Error::InvalidParameter(
                "omega_c must be finite".into(),
            ));
        }
        if let Some(atom) = &self.atom {
            if atom.site == 0 || atom.site > self.n_cavities {
                return Err(Error::InvalidParameter(format!(
                    "atom site {} outside the super cavity 1..={}",
                    atom.site, self.n_cavities
                )));
            }
            if !atom.omega_a.is_finite() {
                return Err(Error::InvalidParameter(
                    "omega_a must be finite".into(),
                ));
            }
            if !(atom.g.is_finite() && atom.g >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "atom coupling g must be finite and non-negative, got {}",
                    atom.g
                )));
            }
        }
        if self.gamma() >= WEAK_COUPLING_LIMIT {
            log::warn!(
                "eta/xi = {:.3} is not small; the weak-coupling (narrow resonance) \
                 regime assumed by the analysis helpers no longer applies",
                self.gamma()
            );
        }
        Ok(())
    }

    /// Number of sites in the super cavity.
    pub fn n_cavities(&self) -> usize {
        self.n_cavities
    }

    /// Reference (bare cavity) frequency.
    pub fn omega_c(&self) -> f64 {
        self.omega_c
    }

    /// Bulk hopping strength.
    pub fn xi(&self) -> f64 {
        self.xi
    }

    /// Boundary hopping strength.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Dimensionless boundary coupling `eta/xi`.
    pub fn gamma(&self) -> f64 {
        self.eta / self.xi
    }

    /// The embedded atom, if any.
    pub fn atom(&self) -> Option<&Atom> {
        self.atom.as_ref()
    }

    /// `true` when an atom is present and actually coupled (`g > 0`).
    pub fn has_coupled_atom(&self) -> bool {
        self.atom.map(|a| a.g > 0.0).unwrap_or(false)
    }

    /// Dimensionless detuning `(omega_c - energy)/xi`; the diagonal entry of
    /// the reduced site equations.
    pub(crate) fn alpha(&self, energy: f64) -> f64 {
        (self.omega_c - energy) / self.xi
    }

    /// Travelling-wave energy `E_k = omega_c + 2 xi cos k` for a wave vector
    /// strictly inside the band.
    pub fn dispersion(&self, k: f64) -> Result<f64> {
        if !(k > 0.0 && k < std::f64::consts::PI) {
            return Err(Error::WaveVectorOutOfBand { k });
        }
        Ok(self.omega_c + 2.0 * self.xi * k.cos())
    }

    /// Inverse of [`dispersion`](Self::dispersion): the wave vector whose
    /// travelling-wave energy equals `energy`. Errors at or outside the band
    /// edges.
    pub fn wavevector_at_energy(&self, energy: f64) -> Result<f64> {
        let x = (energy - self.omega_c) / (2.0 * self.xi);
        if x.abs() >= 1.0 || x.is_nan() {
            return Err(Error::Domain(format!(
                "energy {energy} lies at or outside the propagating band"
            )));
        }
        Ok(x.acos())
    }

    /// Quantized angle `theta_m = m pi / (N + 1)` of the m-th standing-wave
    /// mode of the isolated segment, `m = 1..=N`.
    pub fn mode_angle(&self, m: usize) -> Result<f64> {
        if m == 0 || m > self.n_cavities {
            return Err(Error::ModeIndexOutOfRange {
                m,
                n_cavities: self.n_cavities,
            });
        }
        Ok(m as f64 * std::f64::consts::PI / (self.n_cavities + 1) as f64)
    }

    /// Site amplitude `sqrt(2/(N+1)) sin(j theta_m)` of the m-th bare segment
    /// mode at site `j`.
    fn mode_amplitude(&self, j: usize, theta: f64) -> f64 {
        (2.0 / (self.n_cavities + 1) as f64).sqrt() * (j as f64 * theta).sin()
    }

    /// Frequency and site amplitudes of the m-th standing-wave mode of the
    /// *empty* (atom-free) super cavity:
    /// `nu_m = omega_c + 2 xi cos(theta_m)` with amplitudes
    /// `sqrt(2/(N+1)) sin(j theta_m)` on sites `j = 1..=N`.
    pub fn empty_mode(&self, m: usize) -> Result<(f64, Vec<f64>)> {
        let theta = self.mode_angle(m)?;
        let frequency = self.omega_c + 2.0 * self.xi * theta.cos();
        let vector = (1..=self.n_cavities)
            .map(|j| self.mode_amplitude(j, theta))
            .collect();
        Ok((frequency, vector))
    }

    /// Coupling of the atom to the m-th bare mode: `g` times the mode
    /// amplitude at the atom's site. Vanishes when the atom sits at a node.
    pub fn mode_coupling(&self, m: usize) -> Result<f64> {
        let atom = self.atom.as_ref().ok_or(Error::NoAtom)?;
        let theta = self.mode_angle(m)?;
        Ok(atom.g * self.mode_amplitude(atom.site, theta))
    }

    /// Vacuum Rabi splitting of the m-th mode:
    /// `sqrt((nu_m - omega_a)^2 + 4 g_m^2)` with `g_m` the mode coupling.
    pub fn rabi_splitting(&self, m: usize) -> Result<f64> {
        let atom = self.atom.as_ref().ok_or(Error::NoAtom)?;
        let (nu_m, _) = self.empty_mode(m)?;
        let g_m = self.mode_coupling(m)?;
        Ok(f64::hypot(nu_m - atom.omega_a, 2.0 * g_m))
    }

    /// Single-excitation Hamiltonian of the isolated super cavity (plus atom
    /// if present) as a dense symmetric matrix.
    ///
    /// Basis order: segment sites `1..=N`, then the atomic excitation.
    pub fn build_hamiltonian(&self) -> Array2<f64> {
        let n = self.n_cavities;
        let dim = n + usize::from(self.atom.is_some());
        let mut h = Array2::zeros((dim, dim));
        for j in 0..n {
            h[(j, j)] = self.omega_c;
            if j + 1 < n {
                h[(j, j + 1)] = self.xi;
                h[(j + 1, j)] = self.xi;
            }
        }
        if let Some(atom) = &self.atom {
            let a = dim - 1;
            h[(a, a)] = atom.omega_a;
            h[(a, atom.site - 1)] = atom.g;
            h[(atom.site - 1, a)] = atom.g;
        }
        h
    }

    /// Diagonalizes the isolated super cavity and returns its spectrum with
    /// labelled basis components.
    pub fn diagonalize_sc(&self) -> Result<ModeSet> {
        let h = self.build_hamiltonian();
        let eigen = numerics::symmetric_eigen(&h.view())?;
        let mut vectors = eigen.vectors;
        for column in vectors.columns_mut() {
            fix_sign(column);
        }
        let mut labels: Vec<BasisLabel> = (1..=self.n_cavities).map(BasisLabel::Site).collect();
        if self.atom.is_some() {
            labels.push(BasisLabel::Atom);
        }
        let modes = ModeSet {
            frequencies: eigen.values,
            vectors,
            labels,
        };
        modes.verify(&h)?;
        Ok(modes)
    }
}

/// Tags the rows of a [`ModeSet`] eigenvector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisLabel {
    /// Photonic excitation of the given segment site (1-based).
    Site(usize),
    /// Atomic excitation.
    Atom,
}

/// Eigenmodes of the isolated super cavity.
///
/// Frequencies ascend; `vectors.column(i)` is the orthonormal eigenvector of
/// `frequencies[i]`, with the sign convention that its largest-magnitude
/// component is positive.
#[derive(Debug, Clone)]
pub struct ModeSet {
    /// Eigenfrequencies in ascending order.
    pub frequencies: Vec<f64>,
    /// Eigenvectors as columns, matching `frequencies`.
    pub vectors: Array2<f64>,
    /// What each row of an eigenvector refers to.
    pub labels: Vec<BasisLabel>,
}

impl ModeSet {
    /// Number of eigenmodes.
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    /// `true` when the set is empty (never for a valid system).
    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// Squared atomic component of eigenvector `idx`, or 0 when the basis has
    /// no atomic row.
    pub fn atomic_weight(&self, idx: usize) -> f64 {
        match self.labels.last() {
            Some(BasisLabel::Atom) => {
                let a = self.vectors.nrows() - 1;
                let v = self.vectors[(a, idx)];
                v * v
            }
            _ => 0.0,
        }
    }

    /// Checks orthonormality and eigen-residuals against the Hamiltonian the
    /// set was computed from.
    fn verify(&self, h: &Array2<f64>) -> Result<()> {
        let dim = self.vectors.nrows();
        let scale = h.iter().fold(0.0_f64, |acc, x| acc.max(x.abs())).max(1.0);
        for i in 0..self.len() {
            let vi = self.vectors.column(i);
            for j in i..self.len() {
                let dot: f64 = vi.dot(&self.vectors.column(j));
                let expected = if i == j { 1.0 } else { 0.0 };
                if (dot - expected).abs() > 1e-10 {
                    return Err(Error::Numeric(format!(
                        "eigenvectors {i} and {j} fail orthonormality by {:.3e}",
                        (dot - expected).abs()
                    )));
                }
            }
            let residual = (0..dim)
                .map(|r| {
                    let hv: f64 = (0..dim).map(|c| h[(r, c)] * vi[c]).sum();
                    (hv - self.frequencies[i] * vi[r]).abs()
                })
                .fold(0.0_f64, f64::max);
            if residual > 1e-10 * scale {
                return Err(Error::Numeric(format!(
                    "eigenpair {i} has residual {residual:.3e} (scale {scale:.3e})"
                )));
            }
        }
        Ok(())
    }
}

/// Flips `v` so that its largest-magnitude entry is positive. Ties resolve to
/// the first such entry, making the convention deterministic.
pub(crate) fn fix_sign(mut v: ndarray::ArrayViewMut1<'_, f64>) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).copied().unwrap_or(0.0) < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}
