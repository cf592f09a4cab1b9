use nalgebra::DMatrix;
use num_complex::Complex64;

use super::tf::{TransferFunction, TransferMatrix};
use crate::error::{Error, Result};

/// Discrete-time realization `x+ = A x + B u`, `y = C x + D u`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
}

impl StateSpace {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(format!("A is {}x{}, must be square", n, a.ncols())));
        }
        if b.nrows() != n || c.ncols() != n {
            return Err(Error::Dimension(format!(
                "B has {} rows and C has {} columns, expected {n}",
                b.nrows(),
                c.ncols()
            )));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::Dimension(format!(
                "D is {}x{}, expected {}x{}",
                d.nrows(),
                d.ncols(),
                c.nrows(),
                b.ncols()
            )));
        }
        Ok(Self { a, b, c, d })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }
    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }
    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    /// `C (zI - A)^-1 B + D`.
    pub fn eval_z(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        let n = self.states();
        let dc = self.d.map(|v| Complex64::new(v, 0.0));
        if n == 0 {
            return Ok(dc);
        }
        let zi_a = DMatrix::<Complex64>::from_fn(n, n, |i, j| {
            let diag = if i == j { z } else { Complex64::new(0.0, 0.0) };
            diag - self.a[(i, j)]
        });
        let bc = self.b.map(|v| Complex64::new(v, 0.0));
        let sol = zi_a
            .lu()
            .solve(&bc)
            .ok_or(Error::EvaluationAtPole { omega: z.arg() })?;
        Ok(self.c.map(|v| Complex64::new(v, 0.0)) * sol + dc)
    }

    pub fn frequency_response(&self, omega: f64) -> Result<DMatrix<Complex64>> {
        self.eval_z(Complex64::from_polar(1.0, omega))
    }
}

/// Controllable canonical form of a SISO transfer function.
pub fn to_state_space(tf: &TransferFunction) -> StateSpace {
    let den = tf.den().coeffs();
    let n = den.len() - 1;
    let lead = den[0];
    let a_coef: Vec<f64> = den[1..].iter().map(|c| c / lead).collect();

    let mut num = vec![0.0; n + 1];
    let raw = tf.num().coeffs();
    num[n + 1 - raw.len()..].copy_from_slice(raw);
    let num: Vec<f64> = num.iter().map(|c| c / lead).collect();

    let d0 = num[0];
    // Strictly proper remainder after removing the feedthrough term.
    let rem: Vec<f64> = (1..=n).map(|i| num[i] - d0 * a_coef[i - 1]).collect();

    let mut a = DMatrix::zeros(n, n);
    for j in 0..n {
        a[(0, j)] = -a_coef[j];
    }
    for i in 1..n {
        a[(i, i - 1)] = 1.0;
    }
    let mut b = DMatrix::zeros(n, 1);
    if n > 0 {
        b[(0, 0)] = 1.0;
    }
    let c = DMatrix::from_row_slice(1, n, &rem);
    let d = DMatrix::from_element(1, 1, d0);
    StateSpace { a, b, c, d }
}

/// Non-minimal realization of a transfer matrix: one canonical block per
/// entry, stacked block-diagonally.
pub fn transfer_matrix_to_state_space(g: &TransferMatrix) -> StateSpace {
    let (rows, cols) = g.dims();
    let parts: Vec<((usize, usize), StateSpace)> =
        g.entries().map(|(ij, tf)| (ij, to_state_space(tf))).collect();
    let n: usize = parts.iter().map(|(_, s)| s.states()).sum();
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, cols);
    let mut c = DMatrix::zeros(rows, n);
    let mut d = DMatrix::zeros(rows, cols);
    let mut off = 0;
    for ((i, j), s) in &parts {
        let k = s.states();
        a.view_mut((off, off), (k, k)).copy_from(&s.a);
        b.view_mut((off, *j), (k, 1)).copy_from(&s.b);
        c.view_mut((*i, off), (1, k)).copy_from(&s.c);
        d[(*i, *j)] = s.d[(0, 0)];
        off += k;
    }
    StateSpace { a, b, c, d }
}
