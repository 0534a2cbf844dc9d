//! Small dense linear-algebra helpers shared by the geometry, flow and
//! energy modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{GeoflowError, Result};

/// Largest absolute entry of `A - Aᵀ`.
pub fn asymmetry(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

/// Extreme eigenvalues of a symmetric matrix, `(min, max)`.
pub fn symmetric_extremes(a: &DMatrix<f64>) -> (f64, f64) {
    if a.nrows() == 1 {
        return (a[(0, 0)], a[(0, 0)]);
    }
    let eig = a.clone().symmetric_eigen();
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

/// Solves `K x = b` for symmetric positive definite `K`.
///
/// Falls back to a jittered Cholesky (`1e-12 · trace / n`) when the plain
/// factorisation fails; the jitter is logged.
pub fn spd_solve(k: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if let Some(ch) = k.clone().cholesky() {
        return Ok(ch.solve(b));
    }
    let n = k.nrows();
    let jitter = 1e-12 * k.trace().abs() / n as f64;
    log::debug!("spd_solve: adding jitter {jitter:.3e}");
    let mut kj = k.clone();
    for i in 0..n {
        kj[(i, i)] += jitter;
    }
    match kj.cholesky() {
        Some(ch) => Ok(ch.solve(b)),
        None => Err(GeoflowError::SingularKernel {
            lambda_min: symmetric_extremes(k).0,
        }),
    }
}

/// Inverse of a symmetric positive definite matrix (same jitter policy as
/// [`spd_solve`]).
pub fn spd_inverse(k: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = k.nrows();
    let mut out = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        out.set_column(j, &spd_solve(k, &e)?);
    }
    // symmetrise away round-off
    Ok((&out + out.transpose()) * 0.5)
}

/// Relative difference `‖a - b‖ / max(‖b‖, floor)`.
pub fn rel_diff(a: &DVector<f64>, b: &DVector<f64>, floor: f64) -> f64 {
    (a - b).norm() / b.norm().max(floor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extremes_of_diagonal() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0, 2.5]));
        let (lo, hi) = symmetric_extremes(&a);
        assert!((lo - 1.0).abs() < 1e-14);
        assert!((hi - 4.0).abs() < 1e-14);
    }

    #[test]
    fn spd_inverse_roundtrip() {
        let k = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let inv = spd_inverse(&k).unwrap();
        let id = &k * &inv;
        assert!((id - DMatrix::<f64>::identity(2, 2)).norm() < 1e-14);
    }
}
