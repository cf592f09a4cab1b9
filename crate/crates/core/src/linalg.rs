use nalgebra::linalg::Schur;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest eigenvalue modulus, from a dense nonsymmetric eigenvalue solve.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "spectral radius of a non-square {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    Ok(eigenvalues(m)?.iter().fold(0.0, |acc: f64, l| acc.max(l.norm())))
}

/// Eigenvalues of a real square matrix with a bounded Schur iteration.
///
/// nalgebra's unbounded variant can spin forever on some inputs (the zero
/// matrix among them), so the iteration count is capped here.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::Dimension(format!("eigenvalues of a non-square {}x{} matrix", n, m.ncols())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    if m.iter().all(|&v| v == 0.0) {
        return Ok(vec![Complex64::new(0.0, 0.0); n]);
    }
    let max_iter = 1000 * n.max(1);
    let schur = Schur::try_new(m.clone(), f64::EPSILON, max_iter).ok_or(Error::NotConverged {
        iters: max_iter,
        prev: f64::NAN,
        last: f64::NAN,
    })?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |acc, &l| acc.min(l))
}

/// Column-stacking vectorization.
pub fn vec_of(m: &DMatrix<f64>) -> Vec<f64> {
    m.as_slice().to_vec()
}
