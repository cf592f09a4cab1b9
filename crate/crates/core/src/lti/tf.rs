use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::poly::Polynomial;
use crate::error::{Error, Result};

/// Default margin for strict Schur stability.
pub const STABILITY_TOL: f64 = 1e-9;

/// Relative root distance under which a pole and a zero cancel.
pub const CANCEL_TOL: f64 = 1e-7;

/// A proper rational transfer function `num(z) / den(z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTf", into = "RawTf")]
pub struct TransferFunction {
    num: Polynomial,
    den: Polynomial,
}

#[derive(Serialize, Deserialize)]
struct RawTf {
    num: Polynomial,
    den: Polynomial,
}

impl TryFrom<RawTf> for TransferFunction {
    type Error = Error;
    fn try_from(raw: RawTf) -> Result<Self> {
        TransferFunction::new(raw.num, raw.den)
    }
}

impl From<TransferFunction> for RawTf {
    fn from(tf: TransferFunction) -> Self {
        RawTf {
            num: tf.num,
            den: tf.den,
        }
    }
}

#[inline]
pub fn unit_circle(omega: f64) -> Complex64 {
    Complex64::from_polar(1.0, omega)
}

impl TransferFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        let den_deg = den.degree().ok_or(Error::ZeroDenominator)?;
        if let Some(num_deg) = num.degree() {
            if num_deg > den_deg {
                return Err(Error::Improper {
                    num: num_deg,
                    den: den_deg,
                });
            }
        }
        Ok(Self { num, den })
    }

    pub fn from_coeffs(num: &[f64], den: &[f64]) -> Result<Self> {
        Self::new(Polynomial::new(num.to_vec())?, Polynomial::new(den.to_vec())?)
    }

    pub fn constant(c: f64) -> Self {
        Self {
            num: Polynomial::constant(c),
            den: Polynomial::constant(1.0),
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// `1 / (z - p)`.
    pub fn first_order(p: f64) -> Self {
        Self {
            num: Polynomial::constant(1.0),
            den: Polynomial::from_real_roots(&[p]),
        }
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn order(&self) -> usize {
        self.den.degree().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Value at an arbitrary complex point.
    pub fn eval_z(&self, z: Complex64) -> Complex64 {
        self.num.eval(z) / self.den.eval(z)
    }

    /// Frequency response at `e^{j omega}`.
    pub fn evaluate(&self, omega: f64) -> Result<Complex64> {
        let z = unit_circle(omega);
        let d = self.den.eval(z);
        if d.norm() <= f64::EPSILON * self.den.max_abs_coeff() {
            return Err(Error::EvaluationAtPole { omega });
        }
        Ok(self.num.eval(z) / d)
    }

    pub fn poles(&self) -> Vec<Complex64> {
        self.den.roots().unwrap_or_default()
    }

    pub fn zeros(&self) -> Vec<Complex64> {
        self.num.roots().unwrap_or_default()
    }

    /// Poles remaining after cancelling against zeros within [`CANCEL_TOL`].
    pub fn uncancelled_poles(&self) -> Vec<Complex64> {
        if self.num.is_zero() {
            return Vec::new();
        }
        let mut zeros = self.zeros();
        let mut out = Vec::new();
        for p in self.poles() {
            let hit = zeros
                .iter()
                .position(|z| (p - z).norm() <= CANCEL_TOL * p.norm().max(1.0));
            match hit {
                Some(i) => {
                    zeros.swap_remove(i);
                }
                None => out.push(p),
            }
        }
        out
    }

    pub fn is_schur_stable(&self, tol: f64) -> bool {
        self.uncancelled_poles()
            .iter()
            .all(|p| p.norm() < 1.0 - tol)
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            num: self.num.scale(k),
            den: self.den.clone(),
        }
    }
}

/// A rectangular grid of SISO transfer functions, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<TransferFunction>,
}

impl TransferMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<TransferFunction>) -> Result<Self> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} transfer matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn from_rows(rows: Vec<Vec<TransferFunction>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged transfer matrix rows".into()));
        }
        Self::new(r, c, rows.into_iter().flatten().collect())
    }

    pub fn scalar(tf: TransferFunction) -> Self {
        Self {
            rows: 1,
            cols: 1,
            entries: vec![tf],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, row: usize, col: usize) -> &TransferFunction {
        &self.entries[row * self.cols + col]
    }

    pub fn entries(&self) -> impl Iterator<Item = ((usize, usize), &TransferFunction)> {
        let cols = self.cols;
        self.entries
            .iter()
            .enumerate()
            .map(move |(i, tf)| ((i / cols, i % cols), tf))
    }

    pub fn evaluate(&self, omega: f64) -> Result<DMatrix<Complex64>> {
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for ((i, j), tf) in self.entries() {
            out[(i, j)] = tf.evaluate(omega)?;
        }
        Ok(out)
    }

    /// First unstable entry, if any.
    pub fn first_unstable(&self, tol: f64) -> Option<(usize, usize)> {
        self.entries()
            .find(|(_, tf)| !tf.is_schur_stable(tol))
            .map(|(ij, _)| ij)
    }

    pub fn is_stable(&self, tol: f64) -> bool {
        self.first_unstable(tol).is_none()
    }
}

/// The 2x2 block seen by the uncertainty pair when a constant gain `k`
/// closes the loop around `plant`:
///
/// ```text
/// [ PK/(1+PK)  P/(1+PK) ]
/// [  K/(1+PK)  1/(1+PK) ]
/// ```
///
/// All four entries share the denominator `den + k num`.
pub fn closed_loop_block(plant: &TransferFunction, k: f64) -> Result<TransferMatrix> {
    let n = plant.num();
    let d = plant.den();
    let common = d.add(&n.scale(k));
    if common.is_zero() {
        return Err(Error::SingularLoop);
    }
    let entry = |num: Polynomial| TransferFunction::new(num, common.clone());
    TransferMatrix::new(
        2,
        2,
        vec![
            entry(n.scale(k))?,
            entry(n.clone())?,
            entry(d.scale(k))?,
            entry(d.clone())?,
        ],
    )
}
