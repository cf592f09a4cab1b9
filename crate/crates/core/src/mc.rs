//! Monte Carlo simulation of the stochastic feedback loop and of the
//! two-agent error recursion.
//!
//! Every trial draws from its own ChaCha stream selected by `(seed, trial)`,
//! and trials are reduced in index order, so reports are bit-reproducible
//! regardless of thread scheduling.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::StateSpace;
use crate::ms::UncertaintyCovariance;

/// Decision threshold on the per-step log-variance slope.
pub const GROWTH_THRESHOLD: f64 = 1e-3;
/// Plateau cap, relative to the first nonzero variance.
pub const PLATEAU_CAP: f64 = 1e3;

/// Label recorded in loop reports for how the algebraic loop is broken.
pub const LOOP_DELAY_CONVENTION: &str = "one-step delay on the uncertainty path: e(k) = d(k) - diag(eta(k)) y(k-1)";

/// Correlated Gaussian uncertainty with a semi-definite Cholesky factor.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    pi: UncertaintyCovariance,
    factor: DMatrix<f64>,
    seed: u64,
}

impl NoiseModel {
    pub fn new(pi: &UncertaintyCovariance, seed: u64) -> Result<Self> {
        let factor = semidefinite_cholesky(pi.matrix())?;
        Ok(Self {
            pi: pi.clone(),
            factor,
            seed,
        })
    }

    pub fn covariance(&self) -> &UncertaintyCovariance {
        &self.pi
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn channels(&self) -> usize {
        self.factor.nrows()
    }

    /// Independent stream for one consumer, derived from the model seed.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }

    pub fn sample_into<R: rand::Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let m = self.channels();
        let mut w = [0.0f64; 16];
        let mut wv = Vec::new();
        let w: &mut [f64] = if m <= 16 {
            &mut w[..m]
        } else {
            wv.resize(m, 0.0);
            &mut wv
        };
        for wi in w.iter_mut() {
            *wi = StandardNormal.sample(rng);
        }
        for (i, o) in out.iter_mut().enumerate().take(m) {
            *o = (0..=i).map(|j| self.factor[(i, j)] * w[j]).sum();
        }
    }
}

/// One draw of the uncertainty vector, `eta = L w` with `w` standard normal.
pub fn sample_uncertainty<R: rand::Rng + ?Sized>(model: &NoiseModel, rng: &mut R) -> Vec<f64> {
    let mut out = vec![0.0; model.channels()];
    model.sample_into(rng, &mut out);
    out
}

/// Lower-triangular `L` with `L L^T = pi`; pivots below `1e-12 trace` are
/// treated as zero, which admits perfectly correlated channels.
fn semidefinite_cholesky(pi: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = pi.nrows();
    let trace = pi.trace();
    let pivot_tol = 1e-12 * trace;
    let mut l = DMatrix::<f64>::zeros(m, m);
    for j in 0..m {
        let d = pi[(j, j)] - (0..j).map(|k| l[(j, k)].powi(2)).sum::<f64>();
        if d <= pivot_tol {
            continue;
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..m {
            let s = pi[(i, j)] - (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum::<f64>();
            l[(i, j)] = s / ljj;
        }
    }
    let err = (&l * l.transpose() - pi).amax();
    if err > 1e-12 * trace.max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidCovariance(format!(
            "factorization residual {err:e} too large"
        )));
    }
    Ok(l)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub horizon: usize,
    pub trials: usize,
    pub input_variance: f64,
    pub initial_state: Vec<f64>,
    pub seed: u64,
}

impl SimConfig {
    fn validate(&self) -> Result<()> {
        if self.horizon < 1 || self.trials < 1 {
            return Err(Error::InvalidConfig("horizon and trials must be at least 1".into()));
        }
        if !(self.input_variance >= 0.0) || !self.input_variance.is_finite() {
            return Err(Error::InvalidConfig("input variance must be finite and nonnegative".into()));
        }
        Ok(())
    }

    fn drive_rng(&self, trial: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial as u64);
        rng
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            horizon: 10_000,
            trials: 200,
            input_variance: 1.0,
            initial_state: Vec::new(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Bounded,
    Divergent,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    /// Cross-trial mean square of the monitored signal at each step. With a
    /// zero-mean drive and zero initial state this is the sample variance.
    pub variance_traj: Vec<f64>,
    pub growth_rate: f64,
    pub classification: Classification,
    pub trials_used: usize,
    pub horizon: usize,
    pub seed: u64,
    /// Pooled one-step ratio `sum_k v(k+1) / sum_k v(k)` over steps with a
    /// positive, finite second moment.
    pub step_ratio: Option<f64>,
    pub overflow_step: Option<usize>,
    pub convention: String,
}

impl SimReport {
    /// JSON form with every `decimate`-th trajectory sample.
    pub fn to_json(&self, decimate: usize) -> serde_json::Value {
        let stride = decimate.max(1);
        let traj: Vec<f64> = self.variance_traj.iter().step_by(stride).copied().collect();
        serde_json::json!({
            "classification": self.classification,
            "growth_rate": self.growth_rate,
            "variance_traj": traj,
            "decimation": stride,
            "trials": self.trials_used,
            "horizon": self.horizon,
            "seed": self.seed,
            "step_ratio": self.step_ratio,
            "overflow_step": self.overflow_step,
            "convention": self.convention,
        })
    }
}

/// Least-squares slope of `y` against its index.
fn ls_slope(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    if y.len() < 2 {
        return 0.0;
    }
    let mx = (n - 1.0) / 2.0;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, v) in y.iter().enumerate() {
        let dx = i as f64 - mx;
        sxy += dx * (v - my);
        sxx += dx * dx;
    }
    sxy / sxx
}

/// Growth slope of a variance trajectory together with its classification.
pub fn growth_of(traj: &[f64], gamma: f64) -> Result<(f64, Classification)> {
    if traj.len() < 16 {
        return Err(Error::TrajectoryTooShort(traj.len()));
    }
    if traj.iter().any(|v| !v.is_finite()) {
        return Ok((f64::INFINITY, Classification::Divergent));
    }
    let Some(start) = traj.iter().position(|&v| v > 0.0) else {
        return Ok((0.0, Classification::Bounded));
    };
    let live = &traj[start..];
    let positive_len = live.iter().position(|&v| v <= 0.0).unwrap_or(live.len());
    let positive = &live[..positive_len];
    let tail = &positive[positive.len() / 2..];
    let logs: Vec<f64> = tail.iter().map(|v| v.ln()).collect();
    let slope = ls_slope(&logs);
    if positive_len < live.len() {
        // Decayed to exactly zero.
        return Ok((slope.min(0.0), Classification::Bounded));
    }
    let class = if slope > gamma {
        Classification::Divergent
    } else if slope < -gamma {
        Classification::Bounded
    } else {
        let tail_max = traj[traj.len() / 2..].iter().fold(0.0f64, |a, &v| a.max(v));
        if tail_max <= PLATEAU_CAP * live[0] {
            Classification::Bounded
        } else {
            Classification::Inconclusive
        }
    };
    Ok((slope, class))
}

pub fn classify_growth(traj: &[f64], gamma: f64) -> Result<Classification> {
    growth_of(traj, gamma).map(|(_, c)| c)
}

fn pooled_ratio(traj: &[f64]) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for w in traj.windows(2) {
        if w[0] > 0.0 && w[0].is_finite() && w[1].is_finite() && w[0] > 1e-250 {
            num += w[1];
            den += w[0];
        }
    }
    (den > 0.0).then(|| num / den)
}

/// Per-trial squared-signal histories reduced to a cross-trial mean square.
fn assemble_report(runs: Vec<Vec<f64>>, cfg: &SimConfig, convention: &str) -> Result<SimReport> {
    let shortest = runs.iter().map(Vec::len).min().unwrap_or(0);
    let overflow_step = (shortest < cfg.horizon).then_some(shortest);
    let mut traj = vec![0.0; shortest];
    for run in &runs {
        for (t, v) in traj.iter_mut().zip(run) {
            *t += v;
        }
    }
    let n = runs.len() as f64;
    traj.iter_mut().for_each(|t| *t /= n);

    let (growth_rate, classification) = if overflow_step.is_some() {
        let g = if traj.len() >= 16 {
            growth_of(&traj, GROWTH_THRESHOLD).map(|(g, _)| g).unwrap_or(f64::INFINITY)
        } else {
            f64::INFINITY
        };
        (g, Classification::Divergent)
    } else {
        growth_of(&traj, GROWTH_THRESHOLD)?
    };
    Ok(SimReport {
        step_ratio: pooled_ratio(&traj),
        variance_traj: traj,
        growth_rate,
        classification,
        trials_used: runs.len(),
        horizon: cfg.horizon,
        seed: cfg.seed,
        overflow_step,
        convention: convention.to_string(),
    })
}

/// Simulate `y = G e`, `e = d - Delta y` over independent trials.
///
/// The uncertainty acts on the previous output sample, which makes the loop
/// causal when `G` has direct feedthrough. The delay does not change the
/// mean-square gain of the loop since `|z^-1| = 1` on the unit circle.
pub fn simulate_loop(g: &StateSpace, model: &NoiseModel, cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    let m = g.outputs();
    if g.inputs() != m || model.channels() != m {
        return Err(Error::Dimension(format!(
            "loop needs a square block matching {} uncertainty channels, got {}x{}",
            model.channels(),
            m,
            g.inputs()
        )));
    }
    let n = g.states();
    if !cfg.initial_state.is_empty() && cfg.initial_state.len() != n {
        return Err(Error::InvalidConfig(format!(
            "initial state has length {}, realization has {n} states",
            cfg.initial_state.len()
        )));
    }
    let x0 = if cfg.initial_state.is_empty() {
        DVector::zeros(n)
    } else {
        DVector::from_column_slice(&cfg.initial_state)
    };
    let sd = cfg.input_variance.sqrt();

    let runs: Vec<Vec<f64>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut noise_rng = model.stream(trial as u64);
            let mut drive_rng = cfg.drive_rng(trial);
            let mut x = x0.clone();
            let mut y_prev = DVector::<f64>::zeros(m);
            let mut e = DVector::<f64>::zeros(m);
            let mut eta = vec![0.0; m];
            let mut out = Vec::with_capacity(cfg.horizon);
            for _ in 0..cfg.horizon {
                model.sample_into(&mut noise_rng, &mut eta);
                for i in 0..m {
                    let d: f64 = StandardNormal.sample(&mut drive_rng);
                    e[i] = sd * d - eta[i] * y_prev[i];
                }
                let y = g.c() * &x + g.d() * &e;
                let ysq = y.norm_squared();
                if !ysq.is_finite() {
                    break;
                }
                out.push(ysq);
                x = g.a() * &x + g.b() * &e;
                y_prev = y;
            }
            out
        })
        .collect();
    assemble_report(runs, cfg, LOOP_DELAY_CONVENTION)
}

/// Simulate the consensus error `e(k+1) = (p1 - (2 + eta1 + eta2) k) e(k) + d(k)`.
///
/// The initial error defaults to 1 when `cfg.initial_state` is empty.
pub fn simulate_two_agent(p1: f64, k: f64, model: &NoiseModel, cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    if model.channels() != 2 {
        return Err(Error::Dimension(format!(
            "two-agent protocol needs 2 uncertainty channels, got {}",
            model.channels()
        )));
    }
    let e0 = match cfg.initial_state.as_slice() {
        [] => 1.0,
        [v] => *v,
        other => {
            return Err(Error::InvalidConfig(format!(
                "two-agent initial error must be a scalar, got {} values",
                other.len()
            )))
        }
    };
    let sd = cfg.input_variance.sqrt();
    let runs: Vec<Vec<f64>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut noise_rng = model.stream(trial as u64);
            let mut drive_rng = cfg.drive_rng(trial);
            let mut e = e0;
            let mut eta = [0.0; 2];
            let mut out = Vec::with_capacity(cfg.horizon);
            for _ in 0..cfg.horizon {
                let esq = e * e;
                if !esq.is_finite() {
                    break;
                }
                out.push(esq);
                model.sample_into(&mut noise_rng, &mut eta);
                let drive = if sd > 0.0 {
                    let d: f64 = StandardNormal.sample(&mut drive_rng);
                    sd * d
                } else {
                    0.0
                };
                e = (p1 - (2.0 + eta[0] + eta[1]) * k) * e + drive;
            }
            out
        })
        .collect();
    assemble_report(runs, cfg, "two-agent error recursion, uncertainty acts without delay")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_factor_reconstructs() {
        let pi = UncertaintyCovariance::two_channel(0.2, 0.1, 0.05).unwrap();
        let m = NoiseModel::new(&pi, 1).unwrap();
        let l = m.factor();
        assert_eq!(l[(0, 1)], 0.0);
        assert!((l * l.transpose() - pi.matrix()).amax() <= 1e-12 * pi.matrix().trace());
    }

    #[test]
    fn perfectly_correlated_factor() {
        let pi = UncertaintyCovariance::two_channel(0.2, 0.05, 0.1).unwrap();
        let m = NoiseModel::new(&pi, 1).unwrap();
        assert_eq!(m.factor()[(1, 1)], 0.0);
        let mut rng = m.stream(0);
        for _ in 0..100 {
            let eta = sample_uncertainty(&m, &mut rng);
            assert!((eta[1] - 0.5 * eta[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_covariance_gives_zero_noise() {
        let m = NoiseModel::new(&UncertaintyCovariance::zero(3), 9).unwrap();
        let mut rng = m.stream(0);
        for _ in 0..50 {
            assert_eq!(sample_uncertainty(&m, &mut rng), vec![0.0; 3]);
        }
    }

    #[test]
    fn classify_geometric() {
        let decay: Vec<f64> = (0..64).map(|k| 0.5f64.powi(k)).collect();
        assert_eq!(classify_growth(&decay, GROWTH_THRESHOLD).unwrap(), Classification::Bounded);
        let grow: Vec<f64> = (0..64).map(|k| 1.2f64.powi(k)).collect();
        assert_eq!(classify_growth(&grow, GROWTH_THRESHOLD).unwrap(), Classification::Divergent);
        assert_eq!(classify_growth(&[0.0; 20], GROWTH_THRESHOLD).unwrap(), Classification::Bounded);
        let flat = vec![2.0; 40];
        assert_eq!(classify_growth(&flat, GROWTH_THRESHOLD).unwrap(), Classification::Bounded);
        assert!(matches!(
            classify_growth(&[1.0; 8], GROWTH_THRESHOLD),
            Err(Error::TrajectoryTooShort(8))
        ));
    }

    #[test]
    fn classify_plateau_above_cap_is_inconclusive() {
        let mut traj = vec![1.0; 10];
        traj.extend(std::iter::repeat(1e5).take(30));
        assert_eq!(
            classify_growth(&traj, GROWTH_THRESHOLD).unwrap(),
            Classification::Inconclusive
        );
    }

    #[test]
    fn decay_to_exact_zero_is_bounded() {
        let mut traj: Vec<f64> = (0..20).map(|k| 0.1f64.powi(k)).collect();
        traj.extend([0.0; 20]);
        assert_eq!(classify_growth(&traj, GROWTH_THRESHOLD).unwrap(), Classification::Bounded);
    }

    #[test]
    fn bad_config() {
        let pi = UncertaintyCovariance::zero(2);
        let m = NoiseModel::new(&pi, 0).unwrap();
        let cfg = SimConfig {
            horizon: 0,
            ..SimConfig::default()
        };
        assert!(matches!(
            simulate_two_agent(1.5, 0.5, &m, &cfg),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn deadbeat_consensus() {
        let p1 = std::f64::consts::SQRT_2;
        let m = NoiseModel::new(&UncertaintyCovariance::zero(2), 3).unwrap();
        let cfg = SimConfig {
            horizon: 32,
            trials: 4,
            input_variance: 0.0,
            ..SimConfig::default()
        };
        let r = simulate_two_agent(p1, p1 / 2.0, &m, &cfg).unwrap();
        assert_eq!(r.variance_traj[0], 1.0);
        assert!(r.variance_traj[1..].iter().all(|&v| v == 0.0));
        assert_eq!(r.classification, Classification::Bounded);
    }

    #[test]
    fn open_loop_growth_ratio() {
        let p1 = 1.3;
        let m = NoiseModel::new(&UncertaintyCovariance::two_channel(0.2, 0.1, 0.05).unwrap(), 3).unwrap();
        let cfg = SimConfig {
            horizon: 64,
            trials: 8,
            input_variance: 0.0,
            ..SimConfig::default()
        };
        let r = simulate_two_agent(p1, 0.0, &m, &cfg).unwrap();
        assert!((r.step_ratio.unwrap() - p1 * p1).abs() < 1e-12);
        assert_eq!(r.classification, Classification::Divergent);
    }
}
