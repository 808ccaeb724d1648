//! Small dense linear-algebra helpers with explicit conditioning checks.

use crate::error::{dim_err, Error, Result};
use nalgebra::{DMatrix, DVector};

/// Largest 2-norm condition number accepted for input matrices.
pub const MAX_CONDITION: f64 = 1e12;

/// 2-norm condition number `σ_max / σ_min` (infinite when singular).
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = a.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Inverse of a square matrix, refusing ill-conditioned inputs.
pub fn checked_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !a.is_square() {
        return Err(dim_err("checked_inverse", "square matrix", format!("{}x{}", a.nrows(), a.ncols())));
    }
    let cond = condition_number(a);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::SingularInput { cond });
    }
    a.clone().lu().try_inverse().ok_or(Error::SingularInput { cond })
}

/// Solves `a x = b` for square `a`, refusing ill-conditioned inputs.
pub fn checked_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if a.nrows() != b.len() {
        return Err(dim_err("checked_solve", a.nrows(), b.len()));
    }
    Ok(checked_inverse(a)? * b)
}
