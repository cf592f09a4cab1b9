//! Independent reference computations shared by the integration tests.
//!
//! None of these call into the library's numerical routines beyond plain
//! evaluation of the polynomial data, so they can serve as oracles.

#![allow(dead_code)]

use std::f64::consts::PI;

use msgain::{TransferFunction, TransferMatrix, UncertaintyCovariance};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SQRT_2: f64 = std::f64::consts::SQRT_2;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn triple() -> UncertaintyCovariance {
    UncertaintyCovariance::two_channel(0.2, 0.1, 0.05).unwrap()
}

/// Multiply out `prod (z - r_i)` for complex-conjugate-closed root sets.
fn poly_from_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (i, v) in c.iter().enumerate() {
            next[i] += v;
            next[i + 1] -= v * r;
        }
        c = next;
    }
    c.iter().map(|v| v.re).collect()
}

/// Random real-rational stable transfer function of the given degree with
/// poles of modulus at most `max_pole`, proper numerator.
pub fn random_stable_tf<R: Rng>(rng: &mut R, degree: usize, max_pole: f64) -> TransferFunction {
    let mut poles = Vec::new();
    while poles.len() < degree {
        if degree - poles.len() >= 2 && rng.random_bool(0.5) {
            let r = rng.random_range(0.0..max_pole);
            let th = rng.random_range(0.0..PI);
            let p = Complex64::from_polar(r, th);
            poles.push(p);
            poles.push(p.conj());
        } else {
            poles.push(Complex64::new(rng.random_range(-max_pole..max_pole), 0.0));
        }
    }
    let den = poly_from_roots(&poles);
    let num_deg = rng.random_range(0..=degree);
    let num: Vec<f64> = (0..=num_deg).map(|_| rng.random_range(-2.0..2.0)).collect();
    let num = if num[0] == 0.0 { vec![1.0] } else { num };
    TransferFunction::from_coeffs(&num, &den).unwrap()
}

/// Random valid two-channel covariance with variances in `(0, max_var]`.
pub fn random_covariance<R: Rng>(rng: &mut R, max_var: f64) -> UncertaintyCovariance {
    let a = rng.random_range(0.0..max_var);
    let b = rng.random_range(0.0..max_var);
    let rho = rng.random_range(-0.99..0.99);
    UncertaintyCovariance::two_channel(a, b, rho * (a * b).sqrt()).unwrap()
}

/// Random `m x m` PSD covariance `L L^T`.
pub fn random_psd<R: Rng>(rng: &mut R, m: usize, scale: f64) -> UncertaintyCovariance {
    let l = DMatrix::from_fn(m, m, |i, j| if j <= i { rng.random_range(-1.0..1.0) } else { 0.0 });
    let p = &l * l.transpose() * scale;
    let p = (&p + p.transpose()) * 0.5;
    UncertaintyCovariance::new(p).unwrap()
}

/// Random stable `m x m` transfer matrix with first- or second-order entries.
pub fn random_stable_matrix<R: Rng>(rng: &mut R, m: usize, max_pole: f64) -> TransferMatrix {
    let entries = (0..m * m)
        .map(|_| {
            let deg = rng.random_range(1..=2);
            random_stable_tf(rng, deg, max_pole)
        })
        .collect();
    TransferMatrix::new(m, m, entries).unwrap()
}

/// Evaluate `num(z)/den(z)` by Horner with the raw coefficients.
pub fn eval_tf(tf: &TransferFunction, z: Complex64) -> Complex64 {
    let h = |c: &[f64]| c.iter().fold(Complex64::new(0.0, 0.0), |acc, &v| acc * z + v);
    h(tf.num().coeffs()) / h(tf.den().coeffs())
}

/// Impulse response by long division of `num/den` in powers of `z^-1`.
pub fn impulse_response(tf: &TransferFunction, len: usize) -> Vec<f64> {
    let den = tf.den().coeffs();
    let n = den.len() - 1;
    let raw = tf.num().coeffs();
    let mut num = vec![0.0; n + 1 - raw.len()];
    num.extend_from_slice(raw);
    let mut h = vec![0.0; len];
    for k in 0..len {
        let mut v = if k <= n { num[k] } else { 0.0 };
        for j in 1..=n.min(k) {
            v -= den[j] * h[k - j];
        }
        h[k] = v / den[0];
    }
    h
}

/// Squared H2 norm as a sum of squared impulse-response samples.
pub fn h2_by_impulse(tf: &TransferFunction) -> f64 {
    impulse_response(tf, 20_000).iter().map(|v| v * v).sum()
}

/// Spectral radius of `diag(vec Pi) * (1/N) sum conj(G) (x) G`, assembled
/// entry by entry with the periodic trapezoid rule.
pub fn radius_oracle(g: &TransferMatrix, pi: &UncertaintyCovariance, points: usize) -> f64 {
    let m = g.dims().0;
    let mut acc = DMatrix::<Complex64>::zeros(m * m, m * m);
    for k in 0..points {
        let w = -PI + 2.0 * PI * k as f64 / points as f64;
        let z = Complex64::from_polar(1.0, w);
        let gz = DMatrix::from_fn(m, m, |i, j| eval_tf(g.get(i, j), z));
        for a in 0..m {
            for b in 0..m {
                for i in 0..m {
                    for j in 0..m {
                        acc[(a * m + i, b * m + j)] += gz[(a, b)].conj() * gz[(i, j)];
                    }
                }
            }
        }
    }
    let p = pi.matrix();
    let mut real = DMatrix::<f64>::zeros(m * m, m * m);
    for r in 0..m * m {
        // vec is column-stacking: index r = col * m + row.
        let w = p[(r % m, r / m)];
        for c in 0..m * m {
            real[(r, c)] = w * acc[(r, c)].re / points as f64;
        }
    }
    power_radius(&real)
}

/// Spectral radius of a nonnegative-ish matrix by repeated squaring of the
/// normalized iterate; falls back to eigenvalues through the characteristic
/// behaviour of `||M^k||^(1/k)`.
pub fn power_radius(m: &DMatrix<f64>) -> f64 {
    let mut a = m.clone();
    let mut log_scale = 0.0;
    let mut k = 1.0;
    for _ in 0..40 {
        let nrm = a.norm();
        if nrm == 0.0 {
            return 0.0;
        }
        a /= nrm;
        log_scale += nrm.ln() / k;
        a = &a * &a;
        k *= 2.0;
    }
    let tail = a.norm();
    if tail == 0.0 {
        return (log_scale).exp();
    }
    (log_scale + tail.ln() / k).exp()
}

/// Brute-force minimum of `f` over `n` equally spaced points of `[lo, hi]`.
pub fn brute_min<F: Fn(f64) -> f64>(lo: f64, hi: f64, n: usize, f: F) -> (f64, f64) {
    let mut best = (lo, f64::INFINITY);
    for i in 0..n {
        let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let v = f(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    best
}

/// Brute-force root of a sign change of `f` on a grid, refined by bisection.
pub fn brute_root<F: Fn(f64) -> f64>(lo: f64, hi: f64, n: usize, f: F) -> Option<f64> {
    let mut prev = (lo, f(lo));
    for i in 1..n {
        let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let v = f(x);
        if prev.1.signum() != v.signum() {
            let (mut a, mut b) = (prev.0, x);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if f(mid).signum() == f(a).signum() {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            return Some(0.5 * (a + b));
        }
        prev = (x, v);
    }
    None
}
