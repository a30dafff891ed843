//! Low-level numerical kernels: overflow-safe tridiagonal continuants, the
//! bordered banded solver behind the direct scattering calculation, and a
//! dense symmetric eigensolver.
//!
//! The kernels are deliberately self-contained so the physics modules above
//! them stay close to the formulas they implement.

mod eigen;
mod solve;

pub use eigen::{symmetric_eigen, Eigen};
pub use solve::{solve_scattering_system, Arrow, SolverSystem};

pub(crate) use solve::dense_solve_full_pivot;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::SystemParams;

/// Width of the guard band around the atomic frequency, in units of `xi`.
///
/// Within `|E - omega_a| < POLE_GUARD * xi` the eliminated-atom diagonal
/// diverges and [`det_a`] refuses to evaluate; callers fall back to the
/// direct solver, which keeps the atomic amplitude as an explicit unknown
/// and has no singularity there.
pub const POLE_GUARD: f64 = 1e-8;

/// A complex number stored as `mantissa * 2^exponent`.
///
/// Determinants of long tridiagonal blocks can overflow `f64` even though
/// only ratios of them are ever needed. The continuant recurrences therefore
/// rescale their running values by powers of two — which is exact — and track
/// the exponent separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledComplex {
    mantissa: Complex64,
    exponent: i32,
}

impl ScaledComplex {
    /// Exact zero.
    pub const ZERO: ScaledComplex = ScaledComplex {
        mantissa: Complex64::new(0.0, 0.0),
        exponent: 0,
    };

    /// Exact one.
    pub const ONE: ScaledComplex = ScaledComplex {
        mantissa: Complex64::new(1.0, 0.0),
        exponent: 0,
    };

    /// Wraps a plain complex value.
    pub fn from_complex(value: Complex64) -> Self {
        ScaledComplex {
            mantissa: value,
            exponent: 0,
        }
        .normalized()
    }

    /// Mantissa after normalization (largest component magnitude in `[1, 2)`).
    pub fn mantissa(&self) -> Complex64 {
        self.mantissa
    }

    /// Power-of-two exponent.
    pub fn exponent(&self) -> i32 {
        self.exponent
    }

    /// Collapses to a plain `Complex64`, saturating to infinity or zero when
    /// the exponent leaves the representable range.
    pub fn to_complex(self) -> Complex64 {
        let scale = f64::exp2(self.exponent as f64);
        self.mantissa * scale
    }

    fn max_component(&self) -> f64 {
        self.mantissa.re.abs().max(self.mantissa.im.abs())
    }

    fn normalized(mut self) -> Self {
        let m = self.max_component();
        if m == 0.0 || !m.is_finite() {
            self.exponent = 0;
            return self;
        }
        let shift = m.log2().floor() as i32;
        if shift != 0 {
            self.mantissa *= f64::exp2(-shift as f64);
            self.exponent += shift;
        }
        self
    }

    /// Ratio of two scaled values as a plain complex number.
    pub fn ratio(self, other: ScaledComplex) -> Complex64 {
        let m = self.mantissa / other.mantissa;
        m * f64::exp2((self.exponent - other.exponent) as f64)
    }
}

impl std::ops::Mul<Complex64> for ScaledComplex {
    type Output = ScaledComplex;

    fn mul(self, rhs: Complex64) -> ScaledComplex {
        ScaledComplex {
            mantissa: self.mantissa * rhs,
            exponent: self.exponent,
        }
        .normalized()
    }
}

impl std::ops::Mul<f64> for ScaledComplex {
    type Output = ScaledComplex;

    fn mul(self, rhs: f64) -> ScaledComplex {
        ScaledComplex {
            mantissa: self.mantissa * rhs,
            exponent: self.exponent,
        }
        .normalized()
    }
}

impl std::ops::Add for ScaledComplex {
    type Output = ScaledComplex;

    fn add(self, rhs: ScaledComplex) -> ScaledComplex {
        // Align onto the larger exponent; anything more than ~2^-80 smaller
        // is still representable in the shared mantissa, far below underflow.
        let (hi, lo) = if self.exponent >= rhs.exponent {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let shift = lo.exponent - hi.exponent;
        let lo_mantissa = if shift < -1100 {
            Complex64::new(0.0, 0.0)
        } else {
            lo.mantissa * f64::exp2(shift as f64)
        };
        ScaledComplex {
            mantissa: hi.mantissa + lo_mantissa,
            exponent: hi.exponent,
        }
        .normalized()
    }
}

impl std::ops::Neg for ScaledComplex {
    type Output = ScaledComplex;

    fn neg(self) -> ScaledComplex {
        ScaledComplex {
            mantissa: -self.mantissa,
            exponent: self.exponent,
        }
    }
}

impl std::ops::Sub for ScaledComplex {
    type Output = ScaledComplex;

    fn sub(self, rhs: ScaledComplex) -> ScaledComplex {
        self + (-rhs)
    }
}

/// Determinant of a tridiagonal matrix via the three-term continuant
/// recurrence `D_j = diag_j * D_{j-1} - p * D_{j-2}`, where `p` is the
/// (uniform) product of each sub/super-diagonal pair.
///
/// Running values are rescaled by powers of two whenever they grow or shrink
/// past `2^±512`, so blocks of length well beyond 10^3 evaluate without
/// overflow. An empty `diag` yields 1 (the empty determinant).
pub fn tridiag_det(diag: &[Complex64], sub_super_product: f64) -> ScaledComplex {
    continuant(diag.len(), |j| diag[j], sub_super_product)
}

/// Continuant recurrence with the diagonal supplied by a closure; shared by
/// [`tridiag_det`] and [`det_a`] so scattering scans avoid building a
/// diagonal vector per grid point.
pub(crate) fn continuant(
    len: usize,
    diag: impl Fn(usize) -> Complex64,
    sub_super_product: f64,
) -> ScaledComplex {
    const RESCALE_LIMIT: f64 = 1.3407807929942597e154; // 2^512
    const RESCALE_STEP: f64 = 512.0;

    let mut prev = Complex64::new(1.0, 0.0); // D_{j-1}, starting from D_0 = 1
    let mut prev2 = Complex64::new(0.0, 0.0); // D_{j-2}, starting from D_{-1} = 0
    let mut exponent: i32 = 0;
    for j in 0..len {
        let next = diag(j) * prev - sub_super_product * prev2;
        prev2 = prev;
        prev = next;
        let m = prev.re.abs().max(prev.im.abs());
        if m > RESCALE_LIMIT {
            let s = f64::exp2(-RESCALE_STEP);
            prev *= s;
            prev2 *= s;
            exponent += RESCALE_STEP as i32;
        } else if m != 0.0 && m < 1.0 / RESCALE_LIMIT {
            let s = f64::exp2(RESCALE_STEP);
            prev *= s;
            prev2 *= s;
            exponent -= RESCALE_STEP as i32;
        }
    }
    ScaledComplex {
        mantissa: prev,
        exponent,
    }
    .normalized()
}

/// Determinant of a super-cavity block of `length` sites at probe energy
/// `energy`, as it appears in the reduced (atom-eliminated) site equations.
///
/// All diagonal entries equal `alpha = (omega_c - E)/xi` except at
/// `atom_pos` (1-based within the block), where elimination of the atomic
/// amplitude shifts the entry to `alpha + g^2 / (xi (E - omega_a))`; the
/// off-diagonals are 1. Pass `atom_pos = None` for an atom-free block.
///
/// Errors with [`Error::PoleProximity`] when the probe energy falls inside
/// the guard band of a coupled atom, where the eliminated entry blows up.
pub fn det_a(
    params: &SystemParams,
    energy: f64,
    length: usize,
    atom_pos: Option<usize>,
) -> Result<ScaledComplex> {
    let alpha = Complex64::new(params.alpha(energy), 0.0);
    let Some(pos) = atom_pos else {
        return Ok(continuant(length, |_| alpha, 1.0));
    };
    let atom = params.atom().ok_or(Error::NoAtom)?;
    if pos == 0 || pos > length {
        return Err(Error::Domain(format!(
            "atom position {pos} outside block 1..={length}"
        )));
    }
    let beta = if atom.g > 0.0 {
        if (energy - atom.omega_a).abs() < POLE_GUARD * params.xi() {
            return Err(Error::PoleProximity {
                energy,
                omega_a: atom.omega_a,
            });
        }
        alpha + atom.g * atom.g / (params.xi() * (energy - atom.omega_a))
    } else {
        alpha
    };
    Ok(continuant(
        length,
        |j| if j + 1 == pos { beta } else { alpha },
        1.0,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SystemParams;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// Dense determinant by cofactor-free Gaussian elimination; the oracle
    /// for the continuant recurrence.
    #[allow(clippy::needless_range_loop)]
    fn dense_det(mut a: Vec<Vec<Complex64>>) -> Complex64 {
        let n = a.len();
        let mut det = Complex64::new(1.0, 0.0);
        for i in 0..n {
            let mut pivot = i;
            for r in i + 1..n {
                if a[r][i].norm() > a[pivot][i].norm() {
                    pivot = r;
                }
            }
            if a[pivot][i].norm() == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            if pivot != i {
                a.swap(pivot, i);
                det = -det;
            }
            det *= a[i][i];
            for r in i + 1..n {
                let f = a[r][i] / a[i][i];
                for c in i..n {
                    let sub = f * a[i][c];
                    a[r][c] -= sub;
                }
            }
        }
        det
    }

    fn tridiag_matrix(diag: &[Complex64], off: f64) -> Vec<Vec<Complex64>> {
        let n = diag.len();
        let mut a = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for i in 0..n {
            a[i][i] = diag[i];
            if i + 1 < n {
                a[i][i + 1] = Complex64::new(off, 0.0);
                a[i + 1][i] = Complex64::new(1.0, 0.0);
            }
        }
        a
    }

    #[test]
    fn continuant_matches_chebyshev_identity() {
        // Uniform diagonal -2 cos k gives (-1)^L sin((L+1)k)/sin k.
        for &k in &[0.3_f64, 0.9, PI / 8.0, 2.2] {
            let alpha = Complex64::new(-2.0 * k.cos(), 0.0);
            for len in 0..=50 {
                let diag = vec![alpha; len];
                let got = tridiag_det(&diag, 1.0).to_complex();
                let expected =
                    (-1.0_f64).powi(len as i32) * ((len as f64 + 1.0) * k).sin() / k.sin();
                assert_abs_diff_eq!(got.re, expected, epsilon = 1e-10);
                assert_abs_diff_eq!(got.im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn continuant_handles_very_long_blocks_without_overflow() {
        // Outside the band the recurrence grows like mu^L with |mu| > 1;
        // at L = 5000 the raw value would overflow f64 by thousands of
        // orders of magnitude.
        let alpha = Complex64::new(-3.0, 0.0);
        let d = tridiag_det(&vec![alpha; 5000], 1.0);
        assert!(d.mantissa().norm().is_finite());
        assert!(d.exponent() > 5000);
        // Growth rate check: |D_L|^(1/L) -> dominant root of x^2 + 3x + 1.
        let mu = (3.0 + 5.0_f64.sqrt()) / 2.0;
        let log2_det = d.mantissa().norm().log2() + d.exponent() as f64;
        assert_abs_diff_eq!(log2_det / 5000.0, mu.log2(), epsilon = 1e-3);
    }

    #[test]
    fn continuant_relative_drift_stays_small_in_band() {
        // In-band values stay O(L); scaling must not disturb them.
        let k = 0.77_f64;
        let alpha = Complex64::new(-2.0 * k.cos(), 0.0);
        let len = 1000;
        let got = tridiag_det(&vec![alpha; len], 1.0).to_complex();
        let expected = (-1.0_f64).powi(len as i32) * ((len as f64 + 1.0) * k).sin() / k.sin();
        assert_abs_diff_eq!(got.re, expected, epsilon = 1e-10 * (len as f64));
    }

    #[test]
    fn empty_diagonal_gives_unit_determinant() {
        assert_eq!(tridiag_det(&[], 1.0).to_complex(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn one_and_two_site_expansions() {
        let a = Complex64::new(-1.3, 0.4);
        assert_eq!(tridiag_det(&[a], 1.0).to_complex(), a);
        let got = tridiag_det(&[a, a], 1.0).to_complex();
        let want = a * a - 1.0;
        assert_abs_diff_eq!(got.re, want.re, epsilon = 1e-15);
        assert_abs_diff_eq!(got.im, want.im, epsilon = 1e-15);
    }

    #[test]
    fn single_site_block_is_its_diagonal() {
        let params = SystemParams::empty(4, 0.01).unwrap();
        let energy = 0.63;
        let got = det_a(&params, energy, 1, None).unwrap().to_complex();
        assert_abs_diff_eq!(got.re, -energy, epsilon = 1e-15);
        assert_abs_diff_eq!(got.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn det_a_matches_dense_oracle() {
        let params = SystemParams::with_atom(12, 0.01, 5, 0.42, 0.17).unwrap();
        let energy = 0.9;
        let alpha = Complex64::new(-energy, 0.0);
        let atom = *params.atom().unwrap();
        let beta = alpha + atom.g * atom.g / (energy - atom.omega_a);
        for (len, pos) in [(12, Some(5)), (11, Some(4)), (7, Some(1)), (9, None)] {
            let got = det_a(&params, energy, len, pos).unwrap().to_complex();
            let mut diag = vec![alpha; len];
            if let Some(p) = pos {
                diag[p - 1] = beta;
            }
            let expected = dense_det(tridiag_matrix(&diag, 1.0));
            assert_abs_diff_eq!(got.re, expected.re, epsilon = 1e-11 * expected.norm().max(1.0));
            assert_abs_diff_eq!(got.im, expected.im, epsilon = 1e-11 * expected.norm().max(1.0));
        }
    }

    #[test]
    fn det_a_vanishes_at_empty_mode_frequencies() {
        let params = SystemParams::empty(8, 0.01).unwrap();
        for m in 1..=8 {
            let (nu, _) = params.empty_mode(m).unwrap();
            let d = det_a(&params, nu, 8, None).unwrap().to_complex();
            // In-band continuants are bounded by L+1, so an absolute
            // tolerance of 1e-12 * (L+1) is a relative one.
            assert!(d.norm() < 1e-12 * 9.0, "mode {m}: |det| = {}", d.norm());
        }
    }

    #[test]
    fn det_a_refuses_guard_band() {
        let params = SystemParams::with_atom(8, 0.01, 3, 0.5, 0.1).unwrap();
        let err = det_a(&params, 0.5 + 1e-9, 8, Some(3)).unwrap_err();
        assert!(matches!(err, Error::PoleProximity { .. }));
        // Uncoupled atom has no pole.
        let params = SystemParams::with_atom(8, 0.01, 3, 0.5, 0.0).unwrap();
        assert!(det_a(&params, 0.5, 8, Some(3)).is_ok());
    }

    #[test]
    fn scaled_complex_arithmetic_round_trips() {
        let a = ScaledComplex::from_complex(Complex64::new(3.0, -4.0));
        let b = ScaledComplex::from_complex(Complex64::new(-0.125, 0.5));
        let sum = (a + b).to_complex();
        assert_abs_diff_eq!(sum.re, 2.875, epsilon = 1e-15);
        assert_abs_diff_eq!(sum.im, -3.5, epsilon = 1e-15);
        let prod = (a * Complex64::new(0.0, 2.0)).to_complex();
        assert_abs_diff_eq!(prod.re, 8.0, epsilon = 1e-15);
        assert_abs_diff_eq!(prod.im, 6.0, epsilon = 1e-15);
        let ratio = a.ratio(b);
        let direct = Complex64::new(3.0, -4.0) / Complex64::new(-0.125, 0.5);
        assert_abs_diff_eq!(ratio.re, direct.re, epsilon = 1e-12);
        assert_abs_diff_eq!(ratio.im, direct.im, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn continuant_matches_dense_oracle_on_random_blocks(
            len in 1usize..9,
            seeds in proptest::collection::vec((-2.5f64..2.5, -2.5f64..2.5), 9),
            off in 0.25f64..2.0,
        ) {
            let diag: Vec<Complex64> = seeds
                .iter()
                .take(len)
                .map(|&(re, im)| Complex64::new(re, im))
                .collect();
            let got = tridiag_det(&diag, off).to_complex();
            let expected = dense_det(tridiag_matrix(&diag, off));
            let scale = expected.norm().max(1.0);
            prop_assert!((got - expected).norm() < 1e-10 * scale);
        }
    }
}
