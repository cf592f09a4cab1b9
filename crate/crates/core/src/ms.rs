//! Mean-square small-gain analysis for a stable block `G` in feedback with a
//! diagonal, spatially correlated, white multiplicative uncertainty.
//!
//! Two equivalent routes to the same spectral radius are provided:
//!
//! * the Kronecker-vectorized matrix `diag(vec Pi) * (1/2pi) int conj(G) (x) G dw`,
//!   whose radius is taken by a dense eigenvalue solve, and
//! * the positive map `X -> (1/2pi) int G (Pi o X) G^H dw` on the PSD cone,
//!   whose radius is found by power iteration.
//!
//! The second route never forms the Kronecker integral.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{min_symmetric_eigenvalue, spectral_radius};
use crate::lti::{h2_norm_sq, FrequencyGrid, H2Method, TransferMatrix, STABILITY_TOL};

/// Width of the band around `rho = 1` reported as marginal.
pub const MARGINAL_BAND: f64 = 1e-6;

const IMAG_RESIDUE_TOL: f64 = 1e-10;

/// Second-moment bound of the stacked uncertainty vector.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyCovariance {
    pi: DMatrix<f64>,
}

impl UncertaintyCovariance {
    pub fn new(pi: DMatrix<f64>) -> Result<Self> {
        let m = pi.nrows();
        if m == 0 || pi.ncols() != m {
            return Err(Error::InvalidCovariance(format!(
                "must be a nonempty square matrix, got {}x{}",
                m,
                pi.ncols()
            )));
        }
        if pi.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCovariance("non-finite entry".into()));
        }
        if pi != pi.transpose() {
            return Err(Error::InvalidCovariance("not symmetric".into()));
        }
        if (0..m).any(|i| pi[(i, i)] < 0.0) {
            return Err(Error::InvalidCovariance("negative variance on the diagonal".into()));
        }
        let trace = pi.trace();
        let min_eig = min_symmetric_eigenvalue(&pi);
        if min_eig < -1e-12 * trace {
            return Err(Error::InvalidCovariance(format!(
                "not positive semi-definite (smallest eigenvalue {min_eig:e})"
            )));
        }
        Ok(Self { pi })
    }

    /// Covariance from `m * m` values in row-major order.
    pub fn from_row_slice(m: usize, values: &[f64]) -> Result<Self> {
        if values.len() != m * m {
            return Err(Error::InvalidCovariance(format!(
                "expected {} values for a {m}x{m} matrix, got {}",
                m * m,
                values.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(m, m, values))
    }

    /// Two channels with variances `s1sq`, `s2sq` and covariance `s12`.
    pub fn two_channel(s1sq: f64, s2sq: f64, s12: f64) -> Result<Self> {
        Self::new(DMatrix::from_row_slice(2, 2, &[s1sq, s12, s12, s2sq]))
    }

    pub fn diagonal(variances: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(
            variances,
        )))
    }

    pub fn zero(m: usize) -> Self {
        Self {
            pi: DMatrix::zeros(m, m),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.pi
    }

    pub fn channels(&self) -> usize {
        self.pi.nrows()
    }

    /// `(s1sq, s2sq, s12)` for a two-channel covariance.
    pub fn triple(&self) -> Result<(f64, f64, f64)> {
        if self.channels() != 2 {
            return Err(Error::InvalidCovariance(format!(
                "expected a 2x2 covariance, got {0}x{0}",
                self.channels()
            )));
        }
        Ok((self.pi[(0, 0)], self.pi[(1, 1)], self.pi[(0, 1)]))
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c >= 0.0) {
            return Err(Error::InvalidCovariance(format!("scale factor {c} must be nonnegative")));
        }
        Ok(Self { pi: &self.pi * c })
    }

    /// Copy with all off-diagonal covariances set to zero.
    pub fn decorrelated(&self) -> Self {
        Self {
            pi: DMatrix::from_diagonal(&self.pi.diagonal()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MsMethod {
    KronVec,
    PowerIter,
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsVerdict {
    pub rho: f64,
    pub stable: bool,
    pub margin: f64,
    pub method: MsMethod,
    pub grid_points: usize,
    /// `|rho - 1|` falls inside [`MARGINAL_BAND`]; the strict inequality is
    /// not numerically trustworthy there.
    pub marginal: bool,
}

impl MsVerdict {
    pub fn from_rho(rho: f64, method: MsMethod, grid_points: usize) -> Self {
        Self {
            rho,
            stable: rho < 1.0,
            margin: 1.0 - rho,
            method,
            grid_points,
            marginal: (rho - 1.0).abs() < MARGINAL_BAND,
        }
    }
}

/// Frequency response of a square block sampled on a grid, stored as
/// `points` consecutive column-major `m x m` blocks.
#[derive(Debug, Clone)]
pub struct SampledResponse {
    m: usize,
    points: usize,
    data: Vec<Complex64>,
}

impl SampledResponse {
    pub fn new(g: &TransferMatrix, grid: FrequencyGrid) -> Result<Self> {
        let (rows, cols) = g.dims();
        if rows != cols {
            return Err(Error::Dimension(format!(
                "mean-square analysis needs a square block, got {rows}x{cols}"
            )));
        }
        if let Some((row, col)) = g.first_unstable(STABILITY_TOL) {
            return Err(Error::UnstableBlock { row, col });
        }
        let blocks: Vec<DMatrix<Complex64>> = (0..grid.points())
            .into_par_iter()
            .map(|k| g.evaluate(grid.omega(k)))
            .collect::<Result<_>>()?;
        let data = blocks.iter().flat_map(|b| b.iter().copied()).collect();
        Ok(Self {
            m: rows,
            points: grid.points(),
            data,
        })
    }

    pub fn channels(&self) -> usize {
        self.m
    }

    pub fn points(&self) -> usize {
        self.points
    }

    #[inline]
    fn block(&self, k: usize) -> &[Complex64] {
        let sz = self.m * self.m;
        &self.data[k * sz..(k + 1) * sz]
    }
}

fn check_channels(samples: &SampledResponse, pi: &UncertaintyCovariance) -> Result<()> {
    if pi.channels() != samples.channels() {
        return Err(Error::Dimension(format!(
            "covariance has {} channels but G is {}x{}",
            pi.channels(),
            samples.channels(),
            samples.channels()
        )));
    }
    Ok(())
}

/// `(1/2pi) int conj(G) (x) G dw` as a real `m^2 x m^2` matrix.
pub fn kron_integral(samples: &SampledResponse) -> Result<DMatrix<f64>> {
    let m = samples.m;
    let mm = m * m;
    let mut acc = DMatrix::<Complex64>::zeros(mm, mm);
    for k in 0..samples.points {
        let g = samples.block(k);
        // (conj(G) (x) G)[(a*m + i, b*m + j)] = conj(G[a,b]) * G[i,j]
        for b in 0..m {
            for a in 0..m {
                let gab = g[b * m + a].conj();
                for j in 0..m {
                    for i in 0..m {
                        acc[(a * m + i, b * m + j)] += gab * g[j * m + i];
                    }
                }
            }
        }
    }
    let n = samples.points as f64;
    let real = acc.map(|c| c.re / n);
    let residue = acc.iter().fold(0.0f64, |r, c| r.max((c.im / n).abs()));
    let scale = real.iter().fold(0.0f64, |r, v| r.max(v.abs()));
    if residue > IMAG_RESIDUE_TOL * scale {
        return Err(Error::QuadratureInconsistency { residue, scale });
    }
    Ok(real)
}

/// `diag(vec Pi) * (1/2pi) int conj(G) (x) G dw`.
pub fn ms_gain_matrix(
    g: &TransferMatrix,
    pi: &UncertaintyCovariance,
    grid: FrequencyGrid,
) -> Result<DMatrix<f64>> {
    let samples = SampledResponse::new(g, grid)?;
    ms_gain_matrix_sampled(&samples, pi)
}

pub fn ms_gain_matrix_sampled(
    samples: &SampledResponse,
    pi: &UncertaintyCovariance,
) -> Result<DMatrix<f64>> {
    check_channels(samples, pi)?;
    let mut m = kron_integral(samples)?;
    for (r, w) in pi.matrix().iter().enumerate() {
        m.row_mut(r).scale_mut(*w);
    }
    Ok(m)
}

/// Mean-square stability test via the Kronecker form.
pub fn is_ms_stable(
    g: &TransferMatrix,
    pi: &UncertaintyCovariance,
    grid: FrequencyGrid,
) -> Result<MsVerdict> {
    let rho = spectral_radius(&ms_gain_matrix(g, pi, grid)?)?;
    Ok(MsVerdict::from_rho(rho, MsMethod::KronVec, grid.points()))
}

/// The positive map `X -> (1/2pi) int G (Pi o X) G^H dw`, evaluated directly
/// from sampled frequency responses.
#[derive(Debug, Clone)]
pub struct MsOperator {
    samples: SampledResponse,
    pi: UncertaintyCovariance,
}

impl MsOperator {
    pub fn new(g: &TransferMatrix, pi: &UncertaintyCovariance, grid: FrequencyGrid) -> Result<Self> {
        Self::from_samples(SampledResponse::new(g, grid)?, pi.clone())
    }

    pub fn from_samples(samples: SampledResponse, pi: UncertaintyCovariance) -> Result<Self> {
        check_channels(&samples, &pi)?;
        Ok(Self { samples, pi })
    }

    pub fn channels(&self) -> usize {
        self.samples.m
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let m = self.samples.m;
        if x.nrows() != m || x.ncols() != m {
            return Err(Error::Dimension(format!(
                "operator acts on {m}x{m} matrices, got {}x{}",
                x.nrows(),
                x.ncols()
            )));
        }
        let w = self.pi.matrix().component_mul(x);
        let mut acc = vec![Complex64::new(0.0, 0.0); m * m];
        let mut gw = vec![Complex64::new(0.0, 0.0); m * m];
        for k in 0..self.samples.points {
            let g = self.samples.block(k);
            // gw = G W
            for j in 0..m {
                for i in 0..m {
                    let mut s = Complex64::new(0.0, 0.0);
                    for l in 0..m {
                        s += g[l * m + i] * w[(l, j)];
                    }
                    gw[j * m + i] = s;
                }
            }
            // acc += gw G^H
            for j in 0..m {
                for i in 0..m {
                    let mut s = Complex64::new(0.0, 0.0);
                    for l in 0..m {
                        s += gw[l * m + i] * g[l * m + j].conj();
                    }
                    acc[j * m + i] += s;
                }
            }
        }
        let n = self.samples.points as f64;
        let y = DMatrix::from_fn(m, m, |i, j| acc[j * m + i].re / n);
        Ok((&y + y.transpose()) * 0.5)
    }

    /// Spectral radius by normalized power iteration on the PSD cone,
    /// starting from the identity.
    pub fn radius(&self, max_iters: usize, tol: f64) -> Result<f64> {
        let m = self.samples.m;
        let mut x = DMatrix::<f64>::identity(m, m) / (m as f64).sqrt();
        let mut prev = f64::NAN;
        for _ in 0..max_iters {
            let y = self.apply(&x)?;
            let r = y.norm();
            if r == 0.0 {
                return Ok(0.0);
            }
            if (r - prev).abs() <= tol * r {
                return Ok(r);
            }
            prev = r;
            x = y / r;
        }
        let last = self.apply(&x)?.norm();
        Err(Error::NotConverged {
            iters: max_iters,
            prev,
            last,
        })
    }
}

pub fn apply_ms_operator(
    g: &TransferMatrix,
    pi: &UncertaintyCovariance,
    x: &DMatrix<f64>,
    grid: FrequencyGrid,
) -> Result<DMatrix<f64>> {
    MsOperator::new(g, pi, grid)?.apply(x)
}

pub const DEFAULT_POWER_ITERS: usize = 20_000;
pub const DEFAULT_POWER_TOL: f64 = 1e-13;

pub fn ms_operator_radius(
    g: &TransferMatrix,
    pi: &UncertaintyCovariance,
    grid: FrequencyGrid,
    max_iters: usize,
    tol: f64,
) -> Result<f64> {
    MsOperator::new(g, pi, grid)?.radius(max_iters, tol)
}

/// Same test as [`is_ms_stable`] but through the cone power iteration.
pub fn is_ms_stable_power(
    g: &TransferMatrix,
    pi: &UncertaintyCovariance,
    grid: FrequencyGrid,
) -> Result<MsVerdict> {
    let rho = ms_operator_radius(g, pi, grid, DEFAULT_POWER_ITERS, DEFAULT_POWER_TOL)?;
    Ok(MsVerdict::from_rho(rho, MsMethod::PowerIter, grid.points()))
}

/// Squared H2 norms of every entry.
pub fn h2_matrix(g: &TransferMatrix) -> Result<DMatrix<f64>> {
    let (rows, cols) = g.dims();
    let mut h = DMatrix::zeros(rows, cols);
    for ((i, j), tf) in g.entries() {
        h[(i, j)] = h2_norm_sq(tf, H2Method::Lyapunov, FrequencyGrid::default())
            .map_err(|_| Error::UnstableBlock { row: i, col: j })?;
    }
    Ok(h)
}

/// Uncorrelated special case: `rho(diag(sigma^2) H)` with `H` the matrix of
/// squared entrywise H2 norms.
pub fn ms_stable_uncorrelated(g: &TransferMatrix, sigmas_sq: &[f64]) -> Result<MsVerdict> {
    let (rows, cols) = g.dims();
    if rows != cols || sigmas_sq.len() != rows {
        return Err(Error::Dimension(format!(
            "{} variances for a {rows}x{cols} block",
            sigmas_sq.len()
        )));
    }
    if sigmas_sq.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
        return Err(Error::InvalidCovariance("variances must be finite and nonnegative".into()));
    }
    let mut h = h2_matrix(g)?;
    for (i, s) in sigmas_sq.iter().enumerate() {
        h.row_mut(i).scale_mut(*s);
    }
    let rho = spectral_radius(&h)?;
    Ok(MsVerdict::from_rho(rho, MsMethod::ClosedForm, 0))
}
