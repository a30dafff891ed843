//! Dense symmetric eigensolver: Householder reduction to tridiagonal form
//! followed by the implicit-shift QL iteration, with eigenvectors
//! accumulated through both stages.
//!
//! The matrices diagonalized here are small (a super cavity plus at most one
//! atomic level), so an O(n^3) dense method with orthogonal transformations
//! is the right trade-off: eigenvectors come out orthonormal to machine
//! precision even for degenerate clusters, which the dressed-mode analysis
//! relies on.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Eigendecomposition of a real symmetric matrix.
///
/// `values` are sorted ascending and `vectors.column(i)` is the unit-norm
/// eigenvector for `values[i]`.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Array2<f64>,
}

/// Relative asymmetry tolerated in the input before it is rejected.
const SYMMETRY_TOL: f64 = 1e-12;
/// Off-diagonal entries below `CONVERGENCE_TOL * ‖A‖` count as converged.
const CONVERGENCE_TOL: f64 = 1e-12;
/// Maximum QL sweeps per eigenvalue before reporting failure.
const MAX_SWEEPS: usize = 50;

/// Diagonalizes a real symmetric matrix.
///
/// Fails with [`Error::Domain`] if the matrix is not square or not symmetric
/// to within `1e-12` relative to its largest entry, and with
/// [`Error::Numeric`] in the (practically unreachable) case that the QL
/// iteration does not converge within 50 sweeps for some eigenvalue.
pub fn symmetric_eigen(matrix: &ArrayView2<f64>) -> Result<Eigen> {
    let (rows, cols) = matrix.dim();
    if rows != cols {
        return Err(Error::Domain(format!(
            "eigensolver needs a square matrix, got {rows}x{cols}"
        )));
    }
    if rows == 0 {
        return Err(Error::Domain("eigensolver needs a non-empty matrix".into()));
    }
    let scale = matrix.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
    if !scale.is_finite() {
        return Err(Error::Domain("matrix contains non-finite entries".into()));
    }
    let sym_tol = SYMMETRY_TOL * scale.max(1.0);
    for i in 0..rows {
        for j in i + 1..rows {
            if (matrix[(i, j)] - matrix[(j, i)]).abs() > sym_tol {
                return Err(Error::Domain(format!(
                    "matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }

    let n = rows;
    let mut z = matrix.to_owned();
    let mut d = vec![0.0_f64; n];
    let mut e = vec![0.0_f64; n];
    tridiagonalize(&mut z, &mut d, &mut e);
    ql_implicit_shift(&mut z, &mut d, &mut e, scale)?;
    sort_ascending(&mut z, &mut d);
    Ok(Eigen {
        values: d,
        vectors: z,
    })
}

/// Householder reduction of `z` to tridiagonal form; on return `d` holds the
/// diagonal, `e` the subdiagonal (with `e[0] = 0`), and `z` the accumulated
/// orthogonal transformation.
fn tridiagonalize(z: &mut Array2<f64>, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0_f64;
        if l > 0 {
            let mut scale = 0.0_f64;
            for k in 0..=l {
                scale += z[(i, k)].abs();
            }
            if scale == 0.0 {
                e[i] = z[(i, l)];
            } else {
                for k in 0..=l {
                    z[(i, k)] /= scale;
                    h += z[(i, k)] * z[(i, k)];
                }
                let mut f = z[(i, l)];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                z[(i, l)] = f - g;
                f = 0.0;
                for j in 0..=l {
                    z[(j, i)] = z[(i, j)] / h;
                    let mut g = 0.0_f64;
                    for k in 0..=j {
                        g += z[(j, k)] * z[(i, k)];
                    }
                    for k in j + 1..=l {
                        g += z[(k, j)] * z[(i, k)];
                    }
                    e[j] = g / h;
                    f += e[j] * z[(i, j)];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = z[(i, j)];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        let delta = f * e[k] + g * z[(i, k)];
                        z[(j, k)] -= delta;
                    }
                }
            }
        } else {
            e[i] = z[(i, l)];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let mut g = 0.0_f64;
                for k in 0..i {
                    g += z[(i, k)] * z[(k, j)];
                }
                for k in 0..i {
                    let delta = g * z[(k, i)];
                    z[(k, j)] -= delta;
                }
            }
        }
        d[i] = z[(i, i)];
        z[(i, i)] = 1.0;
        for j in 0..i {
            z[(j, i)] = 0.0;
            z[(i, j)] = 0.0;
        }
    }
}

/// Implicit-shift QL iteration on the tridiagonal pair `(d, e)`, rotating
/// the columns of `z` along with it.
fn ql_implicit_shift(z: &mut Array2<f64>, d: &mut [f64], e: &mut [f64], scale: f64) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let tol = CONVERGENCE_TOL * scale.max(f64::MIN_POSITIVE);

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                if e[m].abs() <= tol {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_SWEEPS {
                return Err(Error::Numeric(format!(
                    "QL iteration for eigenvalue {l} did not converge in {MAX_SWEEPS} sweeps"
                )));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0_f64;
            let mut c = 1.0_f64;
            let mut p = 0.0_f64;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = z[(k, i + 1)];
                    z[(k, i + 1)] = s * z[(k, i)] + c * f;
                    z[(k, i)] = c * z[(k, i)] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

fn sort_ascending(z: &mut Array2<f64>, d: &mut [f64]) {
    let n = d.len();
    for i in 0..n {
        let mut min = i;
        for j in i + 1..n {
            if d[j] < d[min] {
                min = j;
            }
        }
        if min != i {
            d.swap(i, min);
            for k in 0..n {
                let t = z[(k, i)];
                z[(k, i)] = z[(k, min)];
                z[(k, min)] = t;
            }
        }
    }
}
