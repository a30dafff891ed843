//! Direct solver for the scattering equations: a complex tridiagonal system
//! bordered by one "arrow" row/column that couples an interior site to the
//! final unknown (the atomic excitation amplitude).
//!
//! The primary path is banded Gaussian elimination with pivoting restricted
//! to adjacent rows, which preserves the band and costs O(dim). Iterative
//! refinement polishes the result; if the banded factorization looks
//! ill-conditioned or the residual will not come down, the solver falls back
//! to dense full-pivot elimination before giving up.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Coupling between an interior unknown and the final (bordered) unknown.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrow {
    /// Index of the interior unknown the final unknown couples to.
    pub site: usize,
    /// Coupling strength; enters symmetrically in both bordered entries.
    pub coupling: f64,
}

/// A symmetric tridiagonal system, optionally bordered by an arrow coupling
/// the unknown `arrow.site` to the last unknown.
///
/// `offdiag[i]` couples unknowns `i` and `i + 1`. When an arrow is present
/// the last unknown must not also carry a tridiagonal link, i.e.
/// `offdiag[dim - 2]` must be zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSystem {
    pub diag: Vec<Complex64>,
    pub offdiag: Vec<Complex64>,
    pub arrow: Option<Arrow>,
    pub rhs: Vec<Complex64>,
}

/// Pivot-ratio threshold beyond which the banded factorization is distrusted
/// and the dense full-pivot path is used instead.
const DENSE_FALLBACK_RATIO: f64 = 1e10;
/// Pivot-ratio threshold beyond which even the dense factorization is
/// reported as ill-conditioned.
const ILL_CONDITIONED_RATIO: f64 = 1e12;
/// Target residual, relative to the right-hand side: `‖rhs - Γx‖∞ <= tol ‖rhs‖∞`.
const RESIDUAL_TOL: f64 = 1e-10;
/// Maximum number of iterative-refinement corrections per factorization path.
const MAX_REFINE_PASSES: usize = 2;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Solves the bordered tridiagonal system, returning all unknowns.
///
/// Fails with [`Error::IllConditioned`] when even dense full-pivot
/// elimination meets a pivot ratio above `1e12`, and with [`Error::Numeric`]
/// when the residual cannot be refined below `1e-10 ‖rhs‖∞`.
pub fn solve_scattering_system(sys: &SolverSystem) -> Result<Vec<Complex64>> {
    let dim = validate(sys)?;
    let rhs_norm = inf_norm(&sys.rhs);
    if rhs_norm == 0.0 {
        return Ok(vec![ZERO; dim]);
    }

    if let Some((mut x, ratio)) = banded_solve(sys, &sys.rhs) {
        if ratio <= DENSE_FALLBACK_RATIO {
            let rn = refine(sys, &mut x, rhs_norm, |r| {
                banded_solve(sys, r).map(|(dx, _)| dx)
            });
            if rn <= RESIDUAL_TOL * rhs_norm {
                return Ok(x);
            }
        }
    }

    let (mut x, ratio) = dense_solve_full_pivot(dense_matrix(sys), &sys.rhs)?;
    if ratio > ILL_CONDITIONED_RATIO {
        return Err(Error::IllConditioned { estimate: ratio });
    }
    let rn = refine(sys, &mut x, rhs_norm, |r| {
        dense_solve_full_pivot(dense_matrix(sys), r)
            .ok()
            .map(|(dx, _)| dx)
    });
    if rn <= RESIDUAL_TOL * rhs_norm {
        Ok(x)
    } else {
        Err(Error::Numeric(format!(
            "scattering system residual {rn:.3e} exceeds {:.3e} after refinement",
            RESIDUAL_TOL * rhs_norm
        )))
    }
}

fn validate(sys: &SolverSystem) -> Result<usize> {
    let dim = sys.diag.len();
    if dim == 0 {
        return Err(Error::Domain("empty scattering system".into()));
    }
    if sys.offdiag.len() + 1 != dim {
        return Err(Error::Domain(format!(
            "offdiag length {} does not match dimension {dim}",
            sys.offdiag.len()
        )));
    }
    if sys.rhs.len() != dim {
        return Err(Error::Domain(format!(
            "rhs length {} does not match dimension {dim}",
            sys.rhs.len()
        )));
    }
    if let Some(arrow) = &sys.arrow {
        if dim < 2 || arrow.site >= dim - 1 {
            return Err(Error::Domain(format!(
                "arrow site {} outside interior of dimension {dim}",
                arrow.site
            )));
        }
        if sys.offdiag[dim - 2] != ZERO {
            return Err(Error::Domain(
                "bordered unknown must couple only through the arrow".into(),
            ));
        }
    }
    Ok(dim)
}

/// Applies up to [`MAX_REFINE_PASSES`] residual corrections; returns the
/// final residual norm.
fn refine(
    sys: &SolverSystem,
    x: &mut [Complex64],
    rhs_norm: f64,
    solve_correction: impl Fn(&[Complex64]) -> Option<Vec<Complex64>>,
) -> f64 {
    for _ in 0..MAX_REFINE_PASSES {
        let r = residual(sys, x);
        let rn = inf_norm(&r);
        if rn <= RESIDUAL_TOL * rhs_norm {
            return rn;
        }
        let Some(dx) = solve_correction(&r) else {
            return rn;
        };
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
    }
    inf_norm(&residual(sys, x))
}

/// Banded elimination with pivoting restricted to adjacent rows.
///
/// Returns the solution and the pivot ratio `max|pivot| / min|pivot|`, or
/// `None` on an exactly zero pivot. Row swaps introduce one extra
/// super-diagonal of fill-in; the arrow row is eliminated as a marching
/// front, leaving a final 2x2 block solved with full pivoting.
fn banded_solve(sys: &SolverSystem, rhs: &[Complex64]) -> Option<(Vec<Complex64>, f64)> {
    let dim = sys.diag.len();
    let band = if sys.arrow.is_some() { dim - 1 } else { dim };

    let mut d: Vec<Complex64> = sys.diag[..band].to_vec();
    let mut s1 = vec![ZERO; band]; // entry one column right of the diagonal
    let mut s2 = vec![ZERO; band]; // fill-in two columns right, created by swaps
    let mut ar = vec![ZERO; band]; // entry in the arrow column
    let mut b = rhs.to_vec();
    let mut arow = vec![ZERO; band]; // arrow row entries in band columns
    let mut a_diag = ZERO;
    let copy = band.saturating_sub(1);
    s1[..copy].copy_from_slice(&sys.offdiag[..copy]);
    if let Some(arrow) = &sys.arrow {
        let c = Complex64::new(arrow.coupling, 0.0);
        ar[arrow.site] = c;
        arow[arrow.site] = c;
        a_diag = sys.diag[dim - 1];
    }

    let mut pivot_min = f64::INFINITY;
    let mut pivot_max = 0.0_f64;
    let note_pivot = |p: f64, pivot_min: &mut f64, pivot_max: &mut f64| {
        *pivot_min = pivot_min.min(p);
        *pivot_max = pivot_max.max(p);
    };

    for i in 0..band - 1 {
        // Row i+1 still holds its original coupling to column i: earlier
        // steps only ever modified rows <= i.
        let mut sub = sys.offdiag[i];
        if sub.norm() > d[i].norm() {
            let swapped_in = (sub, d[i + 1], s1[i + 1], ar[i + 1]);
            let swapped_out = (d[i], s1[i], s2[i], ar[i]);
            (d[i], s1[i], s2[i], ar[i]) = swapped_in;
            (sub, d[i + 1], s1[i + 1], ar[i + 1]) = swapped_out;
            b.swap(i, i + 1);
        }
        let pivot = d[i].norm();
        if pivot == 0.0 {
            return None;
        }
        note_pivot(pivot, &mut pivot_min, &mut pivot_max);

        let f = sub / d[i];
        d[i + 1] -= f * s1[i];
        s1[i + 1] -= f * s2[i];
        let t_ar = f * ar[i];
        ar[i + 1] -= t_ar;
        let t_b = f * b[i];
        b[i + 1] -= t_b;

        if sys.arrow.is_some() && arow[i] != ZERO {
            let fa = arow[i] / d[i];
            arow[i] = ZERO;
            arow[i + 1] -= fa * s1[i];
            if i + 2 < band {
                arow[i + 2] -= fa * s2[i];
            }
            a_diag -= fa * ar[i];
            let t_rhs = fa * b[i];
            b[dim - 1] -= t_rhs;
        }
    }

    let last = band - 1;
    let mut x = vec![ZERO; dim];
    if sys.arrow.is_some() {
        // Remaining 2x2 block in (x_last, x_arrow), solved with full pivoting.
        let mut rows = [[d[last], ar[last], b[last]], [arow[last], a_diag, b[dim - 1]]];
        if rows[1][0].norm() > rows[0][0].norm() {
            rows.swap(0, 1);
        }
        let p0 = rows[0][0].norm();
        if p0 == 0.0 {
            return None;
        }
        note_pivot(p0, &mut pivot_min, &mut pivot_max);
        let f = rows[1][0] / rows[0][0];
        let corner = rows[1][1] - f * rows[0][1];
        let p1 = corner.norm();
        if p1 == 0.0 {
            return None;
        }
        note_pivot(p1, &mut pivot_min, &mut pivot_max);
        let xa = (rows[1][2] - f * rows[0][2]) / corner;
        x[dim - 1] = xa;
        x[last] = (rows[0][2] - rows[0][1] * xa) / rows[0][0];
    } else {
        let p = d[last].norm();
        if p == 0.0 {
            return None;
        }
        note_pivot(p, &mut pivot_min, &mut pivot_max);
        x[last] = b[last] / d[last];
    }

    for i in (0..band.saturating_sub(1)).rev() {
        let mut acc = b[i] - s1[i] * x[i + 1];
        if i + 2 < band {
            acc -= s2[i] * x[i + 2];
        }
        if sys.arrow.is_some() {
            acc -= ar[i] * x[dim - 1];
        }
        x[i] = acc / d[i];
    }
    Some((x, pivot_max / pivot_min))
}

/// Dense Gaussian elimination with full pivoting. Returns the solution and
/// the pivot ratio as a cheap conditioning proxy.
///
/// Shared with the few-mode scattering models, which produce small dense
/// systems of the same complex-symmetric character.
#[allow(clippy::needless_range_loop)] // index loops mirror the matrix algebra
pub(crate) fn dense_solve_full_pivot(
    mut a: Vec<Vec<Complex64>>,
    rhs: &[Complex64],
) -> Result<(Vec<Complex64>, f64)> {
    let n = a.len();
    if n == 0 || rhs.len() != n || a.iter().any(|row| row.len() != n) {
        return Err(Error::Domain("dense system shape mismatch".into()));
    }
    let mut b = rhs.to_vec();
    let mut col_of: Vec<usize> = (0..n).collect();
    let mut pivot_min = f64::INFINITY;
    let mut pivot_max = 0.0_f64;
    for i in 0..n {
        let (mut br, mut bc, mut bv) = (i, i, 0.0_f64);
        for r in i..n {
            for c in i..n {
                let v = a[r][c].norm();
                if v > bv {
                    (br, bc, bv) = (r, c, v);
                }
            }
        }
        if bv == 0.0 {
            return Err(Error::IllConditioned {
                estimate: f64::INFINITY,
            });
        }
        if br != i {
            a.swap(i, br);
            b.swap(i, br);
        }
        if bc != i {
            for row in a.iter_mut() {
                row.swap(i, bc);
            }
            col_of.swap(i, bc);
        }
        pivot_min = pivot_min.min(bv);
        pivot_max = pivot_max.max(bv);
        for r in i + 1..n {
            let f = a[r][i] / a[i][i];
            if f != ZERO {
                for c in i + 1..n {
                    let t = f * a[i][c];
                    a[r][c] -= t;
                }
                let t = f * b[i];
                b[r] -= t;
            }
        }
    }
    let mut y = vec![ZERO; n];
    for i in (0..n).rev() {
        let mut acc = b[i];
        for c in i + 1..n {
            acc -= a[i][c] * y[c];
        }
        y[i] = acc / a[i][i];
    }
    let mut x = vec![ZERO; n];
    for (j, &col) in col_of.iter().enumerate() {
        x[col] = y[j];
    }
    Ok((x, pivot_max / pivot_min))
}

/// Matrix-vector product with the bordered tridiagonal operator.
fn apply(sys: &SolverSystem, x: &[Complex64]) -> Vec<Complex64> {
    let dim = sys.diag.len();
    let mut y = vec![ZERO; dim];
    for i in 0..dim {
        let mut acc = sys.diag[i] * x[i];
        if i > 0 {
            acc += sys.offdiag[i - 1] * x[i - 1];
        }
        if i + 1 < dim {
            acc += sys.offdiag[i] * x[i + 1];
        }
        y[i] = acc;
    }
    if let Some(arrow) = &sys.arrow {
        let c = Complex64::new(arrow.coupling, 0.0);
        y[arrow.site] += c * x[dim - 1];
        y[dim - 1] += c * x[arrow.site];
    }
    y
}

fn residual(sys: &SolverSystem, x: &[Complex64]) -> Vec<Complex64> {
    let ax = apply(sys, x);
    sys.rhs.iter().zip(ax).map(|(r, a)| r - a).collect()
}

fn inf_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn dense_matrix(sys: &SolverSystem) -> Vec<Vec<Complex64>> {
    let dim = sys.diag.len();
    let mut a = vec![vec![ZERO; dim]; dim];
    for i in 0..dim {
        a[i][i] = sys.diag[i];
        if i + 1 < dim {
            a[i][i + 1] = sys.offdiag[i];
            a[i + 1][i] = sys.offdiag[i];
        }
    }
    if let Some(arrow) = &sys.arrow {
        let c = Complex64::new(arrow.coupling, 0.0);
        a[arrow.site][dim - 1] = c;
        a[dim - 1][arrow.site] = c;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Independent oracle: naive Gaussian elimination with partial pivoting,
    /// written against the dense image of the system.
    #[allow(clippy::needless_range_loop)]
    fn oracle_solve(sys: &SolverSystem) -> Vec<Complex64> {
        let mut a = dense_matrix(sys);
        let n = a.len();
        let mut b = sys.rhs.clone();
        for i in 0..n {
            let mut p = i;
            for r in i + 1..n {
                if a[r][i].norm() > a[p][i].norm() {
                    p = r;
                }
            }
            a.swap(i, p);
            b.swap(i, p);
            for r in i + 1..n {
                let f = a[r][i] / a[i][i];
                for c in i..n {
                    let t = f * a[i][c];
                    a[r][c] -= t;
                }
                let t = f * b[i];
                b[r] -= t;
            }
        }
        let mut x = vec![ZERO; n];
        for i in (0..n).rev() {
            let mut acc = b[i];
            for c in i + 1..n {
                acc -= a[i][c] * x[c];
            }
            x[i] = acc / a[i][i];
        }
        x
    }

    fn assert_close(got: &[Complex64], want: &[Complex64], tol: f64) {
        assert_eq!(got.len(), want.len());
        let scale = inf_norm(want).max(1.0);
        for (g, w) in got.iter().zip(want) {
            assert!(
                (g - w).norm() <= tol * scale,
                "got {g}, want {w} (tol {tol:e}, scale {scale:e})"
            );
        }
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn two_by_two_matches_hand_solution() {
        let sys = SolverSystem {
            diag: vec![c(2.0, 0.0), c(2.0, 0.0)],
            offdiag: vec![c(1.0, 0.0)],
            arrow: None,
            rhs: vec![c(1.0, 0.0), c(0.0, 0.0)],
        };
        let x = solve_scattering_system(&sys).unwrap();
        assert_abs_diff_eq!(x[0].re, 2.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(x[1].re, -1.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(x[0].im, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn zero_leading_pivot_is_handled_by_row_swap() {
        let sys = SolverSystem {
            diag: vec![c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)],
            offdiag: vec![c(1.0, 0.0), c(1.0, 0.0)],
            arrow: None,
            rhs: vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)],
        };
        let x = solve_scattering_system(&sys).unwrap();
        assert_close(&x, &oracle_solve(&sys), 1e-12);
    }

    #[test]
    fn singular_system_is_rejected() {
        // Second row is forced to zero by the first elimination step and the
        // system is inconsistent, so no finite solution exists.
        let sys = SolverSystem {
            diag: vec![c(0.0, 0.0), c(1.0, 0.0)],
            offdiag: vec![c(0.0, 0.0)],
            arrow: None,
            rhs: vec![c(1.0, 0.0), c(0.0, 0.0)],
        };
        assert!(solve_scattering_system(&sys).is_err());
    }

    #[test]
    fn arrow_shape_validation() {
        let bad = SolverSystem {
            diag: vec![c(1.0, 0.0); 4],
            offdiag: vec![c(1.0, 0.0); 3], // last link must be zero with an arrow
            arrow: Some(Arrow {
                site: 1,
                coupling: 0.5,
            }),
            rhs: vec![ZERO; 4],
        };
        assert!(matches!(
            solve_scattering_system(&bad),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn long_chain_solution_has_tiny_residual() {
        let dim = 1200;
        let mut diag = Vec::with_capacity(dim);
        for i in 0..dim {
            let t = i as f64 / dim as f64;
            diag.push(c(-1.2 + 0.1 * (13.0 * t).sin(), 0.3 + 0.05 * (7.0 * t).cos()));
        }
        let mut offdiag = vec![c(1.0, 0.0); dim - 1];
        offdiag[dim - 2] = ZERO;
        let mut rhs = vec![ZERO; dim];
        rhs[0] = c(0.0, 2.0);
        let sys = SolverSystem {
            diag,
            offdiag,
            arrow: Some(Arrow {
                site: 613,
                coupling: 0.07,
            }),
            rhs,
        };
        let x = solve_scattering_system(&sys).unwrap();
        let r = residual(&sys, &x);
        assert!(inf_norm(&r) <= 1e-10 * inf_norm(&sys.rhs));
    }

    #[test]
    fn banded_path_agrees_with_oracle_on_arrow_system() {
        let dim = 9;
        let mut offdiag = vec![c(1.0, 0.0); dim - 1];
        offdiag[dim - 2] = ZERO;
        let mut rhs = vec![ZERO; dim];
        rhs[0] = c(0.3, -1.1);
        let sys = SolverSystem {
            diag: (0..dim)
                .map(|i| c(-0.4 - 0.2 * i as f64, 0.5))
                .collect(),
            offdiag,
            arrow: Some(Arrow {
                site: 3,
                coupling: 0.25,
            }),
            rhs,
        };
        let (x, ratio) = banded_solve(&sys, &sys.rhs).unwrap();
        assert!(ratio.is_finite());
        assert_close(&x, &oracle_solve(&sys), 1e-11);
    }

    #[test]
    fn dense_full_pivot_matches_oracle() {
        let a = vec![
            vec![c(0.0, 1.0), c(2.0, 0.0), c(1.0, -1.0)],
            vec![c(2.0, 0.0), c(0.1, 0.0), c(0.0, 0.0)],
            vec![c(1.0, -1.0), c(0.0, 0.0), c(3.0, 0.5)],
        ];
        let rhs = vec![c(1.0, 0.0), c(0.0, 1.0), c(-2.0, 0.0)];
        let (x, ratio) = dense_solve_full_pivot(a.clone(), &rhs).unwrap();
        assert!(ratio >= 1.0);
        for i in 0..3 {
            let mut acc = ZERO;
            for j in 0..3 {
                acc += a[i][j] * x[j];
            }
            assert!((acc - rhs[i]).norm() < 1e-12);
        }
    }

    fn complex_in(range: std::ops::Range<f64>) -> impl Strategy<Value = Complex64> {
        (range.clone(), range).prop_map(|(re, im)| Complex64::new(re, im))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(512))]

        #[test]
        fn random_tridiagonal_systems_match_oracle(
            diag in proptest::collection::vec(complex_in(3.0..6.0), 2..40),
            offs in proptest::collection::vec(complex_in(-1.0..1.0), 39),
            rhs_seed in proptest::collection::vec(complex_in(-2.0..2.0), 40),
        ) {
            let dim = diag.len();
            let offdiag = offs[..dim - 1].to_vec();
            let rhs = rhs_seed[..dim].to_vec();
            let sys = SolverSystem { diag, offdiag, arrow: None, rhs };
            let x = solve_scattering_system(&sys).unwrap();
            let want = oracle_solve(&sys);
            let scale = inf_norm(&want).max(1.0);
            for (g, w) in x.iter().zip(&want) {
                prop_assert!((g - w).norm() <= 1e-9 * scale);
            }
        }

        #[test]
        fn random_arrow_systems_match_oracle(
            diag in proptest::collection::vec(complex_in(3.0..6.0), 4..40),
            offs in proptest::collection::vec(complex_in(-1.0..1.0), 39),
            rhs_seed in proptest::collection::vec(complex_in(-2.0..2.0), 40),
            site_seed in 0usize..100,
            coupling in 0.01f64..0.9,
        ) {
            let dim = diag.len();
            let mut offdiag = offs[..dim - 1].to_vec();
            offdiag[dim - 2] = ZERO;
            let rhs = rhs_seed[..dim].to_vec();
            let site = site_seed % (dim - 1);
            let sys = SolverSystem {
                diag,
                offdiag,
                arrow: Some(Arrow { site, coupling }),
                rhs,
            };
            let x = solve_scattering_system(&sys).unwrap();
            let want = oracle_solve(&sys);
            let scale = inf_norm(&want).max(1.0);
            for (g, w) in x.iter().zip(&want) {
                prop_assert!((g - w).norm() <= 1e-9 * scale);
            }
        }
    }
}
