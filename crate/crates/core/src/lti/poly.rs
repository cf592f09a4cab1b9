//! Real polynomials in z, stored with descending powers.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative residual tolerance accepted for a computed root.
pub const TOL_ROOT: f64 = 1e-9;

/// A real polynomial `c[0] z^n + c[1] z^(n-1) + ... + c[n]`.
///
/// Leading zeros are stripped on construction, so the leading coefficient of a
/// nonzero polynomial is always nonzero. The zero polynomial has no
/// coefficients and no degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Polynomial {
    type Error = Error;

    fn try_from(coeffs: Vec<f64>) -> Result<Self> {
        Polynomial::new(coeffs)
    }
}

impl From<Polynomial> for Vec<f64> {
    fn from(p: Polynomial) -> Self {
        if p.coeffs.is_empty() {
            vec![0.0]
        } else {
            p.coeffs
        }
    }
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        let first = coeffs.iter().position(|&c| c != 0.0).unwrap_or(coeffs.len());
        Ok(Self {
            coeffs: coeffs[first..].to_vec(),
        })
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        if c == 0.0 {
            Self::zero()
        } else {
            Self { coeffs: vec![c] }
        }
    }

    /// Monic polynomial with the given real roots.
    pub fn from_real_roots(roots: &[f64]) -> Self {
        roots.iter().fold(Self::constant(1.0), |acc, &r| {
            acc.mul(&Self {
                coeffs: vec![1.0, -r],
            })
        })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.first().copied().unwrap_or(0.0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
    }

    fn derivative_eval(&self, z: Complex64) -> Complex64 {
        let n = self.coeffs.len();
        if n < 2 {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs[..n - 1]
            .iter()
            .enumerate()
            .fold(Complex64::new(0.0, 0.0), |acc, (i, &c)| {
                acc * z + c * (n - 1 - i) as f64
            })
    }

    pub fn scale(&self, k: f64) -> Self {
        if k == 0.0 {
            return Self::zero();
        }
        Self {
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let pad = |c: &[f64]| {
            let mut v = vec![0.0; n - c.len()];
            v.extend_from_slice(c);
            v
        };
        let a = pad(&self.coeffs);
        let b = pad(&other.coeffs);
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        // Finite inputs give finite sums, so this cannot fail.
        Self::new(sum).unwrap_or_else(|_| Self::zero())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out).unwrap_or_else(|_| Self::zero())
    }

    /// All roots with multiplicity, from the eigenvalues of the companion
    /// matrix followed by a guarded Newton polish.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        let n = match self.degree() {
            None | Some(0) => return Err(Error::NoRoots),
            Some(n) => n,
        };
        let lead = self.coeffs[0];
        if n == 1 {
            return Ok(vec![Complex64::new(-self.coeffs[1] / lead, 0.0)]);
        }
        let mut companion = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            companion[(0, j)] = -self.coeffs[j + 1] / lead;
        }
        for i in 1..n {
            companion[(i, i - 1)] = 1.0;
        }
        let raw = crate::linalg::eigenvalues(&companion)?;
        Ok(raw.iter().map(|&r| self.polish(r)).collect())
    }

    fn polish(&self, mut r: Complex64) -> Complex64 {
        let mut res = self.eval(r).norm();
        for _ in 0..3 {
            let d = self.derivative_eval(r);
            if d.norm() == 0.0 || res == 0.0 {
                break;
            }
            let cand = r - self.eval(r) / d;
            let cres = self.eval(cand).norm();
            if cand.re.is_finite() && cand.im.is_finite() && cres < res {
                r = cand;
                res = cres;
            } else {
                break;
            }
        }
        // Snap numerically real roots of a real polynomial onto the axis.
        if r.im.abs() <= 1e-14 * (1.0 + r.re.abs()) {
            r.im = 0.0;
        }
        r
    }

    /// Residual bound used to accept a root `r`.
    pub fn root_residual_bound(&self, r: Complex64) -> f64 {
        let n = self.degree().unwrap_or(0) as i32;
        TOL_ROOT * self.max_abs_coeff() * (1.0 + r.norm()).powi(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_re(mut v: Vec<Complex64>) -> Vec<f64> {
        v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        v.iter().map(|c| c.re).collect()
    }

    #[test]
    fn linear_root() {
        let p = Polynomial::new(vec![1.0, -2f64.sqrt()]).unwrap();
        let r = p.roots().unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0].re - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn quadratic_roots() {
        let p = Polynomial::new(vec![1.0, 0.0, -1.0]).unwrap();
        let r = sorted_re(p.roots().unwrap());
        assert!((r[0] + 1.0).abs() < 1e-12 && (r[1] - 1.0).abs() < 1e-12);

        let p = Polynomial::new(vec![1.0, -3.0, 2.0]).unwrap();
        let roots = p.roots().unwrap();
        for &r in &roots {
            assert!(p.eval(r).norm() <= p.root_residual_bound(r));
        }
        let r = sorted_re(roots);
        assert!((r[0] - 1.0).abs() < 1e-12 && (r[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn complex_pair() {
        // z^2 + 1
        let p = Polynomial::new(vec![1.0, 0.0, 1.0]).unwrap();
        let r = p.roots().unwrap();
        assert!(r.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12 && z.re.abs() < 1e-12));
    }

    #[test]
    fn constant_has_no_roots() {
        assert_eq!(Polynomial::constant(3.0).roots(), Err(Error::NoRoots));
        assert_eq!(Polynomial::zero().roots(), Err(Error::NoRoots));
    }

    #[test]
    fn strips_leading_zeros() {
        let p = Polynomial::new(vec![0.0, 0.0, 2.0, 1.0]).unwrap();
        assert_eq!(p.degree(), Some(1));
        assert_eq!(p.coeffs(), &[2.0, 1.0]);
        assert!(Polynomial::new(vec![0.0, 0.0]).unwrap().is_zero());
        assert_eq!(Polynomial::new(vec![f64::NAN]), Err(Error::NonFinite));
    }

    #[test]
    fn arithmetic() {
        let a = Polynomial::from_real_roots(&[1.0, 2.0]);
        assert_eq!(a.coeffs(), &[1.0, -3.0, 2.0]);
        let b = a.sub(&a);
        assert!(b.is_zero());
        let c = a.add(&Polynomial::constant(-2.0));
        assert_eq!(c.coeffs(), &[1.0, -3.0, 0.0]);
    }
}
