//! Thin dense helpers over `faer` used by the projections and the solver.

use faer::{MatRef, Side};

use crate::error::{Error, Result};
use crate::{c64, CMat};

/// Frobenius norm.
pub fn fro_norm(a: MatRef<'_, c64>) -> f64 {
    a.norm_l2()
}

/// Squared Frobenius distance `‖a − b‖²_F`.
pub fn fro_dist_sq(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += (a[(i, j)] - b[(i, j)]).norm_sqr();
        }
    }
    acc
}

/// Real part of the Frobenius inner product `Re trace(aᴴ b)`.
pub fn inner_re(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += (a[(i, j)].conj() * b[(i, j)]).re;
        }
    }
    acc
}

/// Real part of the trace.
pub fn trace_re(a: MatRef<'_, c64>) -> f64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)].re).sum()
}

/// `‖a − aᴴ‖_F`.
pub fn hermitian_defect(a: MatRef<'_, c64>) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for j in 0..n {
        for i in 0..n {
            acc += (a[(i, j)] - a[(j, i)].conj()).norm_sqr();
        }
    }
    acc.sqrt()
}

pub fn all_finite(a: MatRef<'_, c64>) -> bool {
    (0..a.ncols()).all(|j| (0..a.nrows()).all(|i| a[(i, j)].re.is_finite() && a[(i, j)].im.is_finite()))
}

/// Eigen-decomposition of a Hermitian matrix (lower triangle is read).
/// Eigenvalues are returned in nondecreasing order with matching columns of `U`.
pub fn hermitian_eigen(a: MatRef<'_, c64>) -> Result<(Vec<f64>, CMat)> {
    if !all_finite(a) {
        return Err(Error::Eigen("non-finite matrix entries".into()));
    }
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let values = (0..s.nrows()).map(|i| s[i].re).collect();
    Ok((values, evd.U().to_owned()))
}

/// Eigenvalues only, nondecreasing.
pub fn hermitian_eigenvalues(a: MatRef<'_, c64>) -> Result<Vec<f64>> {
    if !all_finite(a) {
        return Err(Error::Eigen("non-finite matrix entries".into()));
    }
    let mut v = a
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Singular values, nonincreasing.
pub fn singular_values(a: MatRef<'_, c64>) -> Result<Vec<f64>> {
    let mut v = a
        .singular_values()
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    v.sort_by(|x, y| y.total_cmp(x));
    Ok(v)
}

pub(crate) fn check_square(a: MatRef<'_, c64>, what: &str) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::ShapeMismatch {
            expected: format!("square {what}"),
            got: format!("{}x{}", a.nrows(), a.ncols()),
        });
    }
    Ok(a.nrows())
}
