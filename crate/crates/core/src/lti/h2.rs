//! Discrete Lyapunov solver and squared H2 norms.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::quad::FrequencyGrid;
use super::ss::to_state_space;
use super::tf::{TransferFunction, STABILITY_TOL};
use crate::error::{Error, Result};
use crate::linalg::spectral_radius;

/// Solve `A X A^T - X + Q = 0` for `X`.
///
/// Uses the Kronecker-vectorized linear system `(I - A (x) A) vec X = vec Q`,
/// which is exact and cheap for the small state dimensions seen here.
pub fn dlyap(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n || q.nrows() != n || q.ncols() != n {
        return Err(Error::Dimension(format!(
            "dlyap needs square A and Q of equal size, got {}x{} and {}x{}",
            n,
            a.ncols(),
            q.nrows(),
            q.ncols()
        )));
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let rho = spectral_radius(a)?;
    if rho >= 1.0 {
        return Err(Error::UnstableLyapunov { rho });
    }
    let lhs = DMatrix::<f64>::identity(n * n, n * n) - a.kronecker(a);
    let rhs = DMatrix::from_column_slice(n * n, 1, q.as_slice());
    let sol = lhs.lu().solve(&rhs).ok_or(Error::UnstableLyapunov { rho })?;
    let x = DMatrix::from_column_slice(n, n, sol.as_slice());
    Ok((&x + x.transpose()) * 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum H2Method {
    #[default]
    Lyapunov,
    Quadrature,
}

/// `(1/2pi) * integral of |tf(e^{jw})|^2` over one period.
pub fn h2_norm_sq(tf: &TransferFunction, method: H2Method, grid: FrequencyGrid) -> Result<f64> {
    if tf.is_zero() {
        return Ok(0.0);
    }
    if !tf.is_schur_stable(STABILITY_TOL) {
        return Err(Error::UnstableH2);
    }
    match method {
        H2Method::Lyapunov => {
            let ss = to_state_space(tf);
            let dd = ss.d()[(0, 0)].powi(2);
            if ss.states() == 0 {
                return Ok(dd);
            }
            // Cancelled unstable modes can survive in the realization.
            let gram = dlyap(ss.a(), &(ss.b() * ss.b().transpose())).map_err(|_| Error::UnstableH2)?;
            let cxc = (ss.c() * gram * ss.c().transpose())[(0, 0)];
            Ok(cxc + dd)
        }
        H2Method::Quadrature => {
            let mut acc = 0.0;
            for w in grid.omegas() {
                acc += tf.evaluate(w)?.norm_sqr();
            }
            Ok(acc / grid.points() as f64)
        }
    }
}
