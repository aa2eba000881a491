//! Dense linear algebra kernels: Cholesky factorization, SPD solves and
//! ordinary least squares via normal equations.
//!
//! Matrices are row-major `Vec<f64>` with explicit dimensions. The sizes
//! involved (16-dimensional covariances, a few dozen regression columns)
//! do not justify a BLAS dependency.

use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
///
/// Returns `None` when a pivot drops below `1e-12`, signalling that the
/// matrix is not numerically positive definite.
pub fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 1e-12 {
                    return None;
                }
                l[i * n + j] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solve `L L^T x = b` given the lower factor from [`cholesky`].
pub fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(b.len(), n);
    // Forward substitution: L y = b.
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * n + k] * y[k];
        }
        y[i] = sum / l[i * n + i];
    }
    // Back substitution: L^T x = y.
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in (i + 1)..n {
            sum -= l[k * n + i] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    x
}

/// Solve the SPD system `A x = b`, ridging the diagonal if `A` is only
/// semi-definite. Used for normal equations where columns may be collinear.
pub fn solve_spd_ridged(a: &[f64], n: usize, b: &[f64]) -> Result<Vec<f64>> {
    let mut ridge = 0.0;
    for _ in 0..6 {
        let mut m = a.to_vec();
        if ridge > 0.0 {
            for i in 0..n {
                m[i * n + i] += ridge;
            }
        }
        if let Some(l) = cholesky(&m, n) {
            return Ok(cholesky_solve(&l, n, b));
        }
        // Scale the ridge to the matrix magnitude so it bites regardless of units.
        let scale = (0..n).map(|i| a[i * n + i].abs()).fold(1e-12, f64::max);
        ridge = if ridge == 0.0 { 1e-8 * scale } else { ridge * 100.0 };
    }
    Err(Error::NonConvergence {
        model: "linalg",
        reason: "matrix not positive definite after ridging".into(),
    })
}

/// Least squares `min ||X beta - y||` via normal equations.
///
/// `x` is row-major with `cols` columns and `y.len()` rows.
pub fn least_squares(x: &[f64], cols: usize, y: &[f64]) -> Result<Vec<f64>> {
    let rows = y.len();
    if cols == 0 {
        return Ok(Vec::new());
    }
    if rows * cols != x.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: rows * cols,
        });
    }
    if rows < cols {
        return Err(Error::TooFewSamples {
            got: rows,
            need: cols,
            what: "least squares",
        });
    }
    let mut xtx = vec![0.0; cols * cols];
    let mut xty = vec![0.0; cols];
    for r in 0..rows {
        let row = &x[r * cols..(r + 1) * cols];
        for i in 0..cols {
            xty[i] += row[i] * y[r];
            for j in 0..=i {
                xtx[i * cols + j] += row[i] * row[j];
            }
        }
    }
    // Mirror the lower triangle.
    for i in 0..cols {
        for j in (i + 1)..cols {
            xtx[i * cols + j] = xtx[j * cols + i];
        }
    }
    solve_spd_ridged(&xtx, cols, &xty)
}
