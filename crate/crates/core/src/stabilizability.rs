//! Closed-form stabilizability and consensusability conditions for
//! first-order plants under correlated input/output uncertainty, plus the
//! gain-search machinery that cross-checks them against the general test.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::{closed_loop_block, FrequencyGrid, TransferFunction};
use crate::ms::{is_ms_stable, UncertaintyCovariance};

/// Interior margin kept away from the ends of a gain or pole interval.
pub const INTERIOR_EPS: f64 = 1e-6;
pub const DEFAULT_SEARCH_GRID: usize = 2048;
pub const DEFAULT_REFINE_TOL: f64 = 1e-8;

/// `1/(z - p1)` (minimum phase) or `(z - s1)/(z - p1)` (nonminimum phase).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderPlant {
    pub p1: f64,
    pub s1: Option<f64>,
}

impl FirstOrderPlant {
    pub fn minimum_phase(p1: f64) -> Result<Self> {
        if !(p1.abs() > 1.0) {
            return Err(Error::StablePlant { p1 });
        }
        Ok(Self { p1, s1: None })
    }

    pub fn nonminimum_phase(p1: f64, s1: f64) -> Result<Self> {
        if !(p1.abs() > 1.0) {
            return Err(Error::StablePlant { p1 });
        }
        if !(s1.abs() > 1.0) {
            return Err(Error::InvalidZero { s1 });
        }
        if p1 == s1 {
            return Err(Error::PoleZeroCoincidence(p1));
        }
        Ok(Self { p1, s1: Some(s1) })
    }

    pub fn transfer_function(&self) -> TransferFunction {
        match self.s1 {
            None => TransferFunction::first_order(self.p1),
            Some(s1) => TransferFunction::from_coeffs(&[1.0, -s1], &[1.0, -self.p1])
                .expect("first-order biproper plant is proper"),
        }
    }

    /// Open interval of constant gains giving a Schur-stable closed loop.
    pub fn stabilizing_interval(&self) -> Result<(f64, f64)> {
        match self.s1 {
            None => Ok((self.p1 - 1.0, self.p1 + 1.0)),
            Some(s1) => jury_gain_interval(self.p1, s1),
        }
    }

    /// Closed-loop pole under constant gain `k`.
    pub fn closed_loop_pole(&self, k: f64) -> f64 {
        match self.s1 {
            None => self.p1 - k,
            Some(s1) => (self.p1 + s1 * k) / (1.0 + k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    #[serde(rename = "C-I")]
    CaseOne,
    #[serde(rename = "C-II")]
    CaseTwo,
    #[serde(rename = "C-cons")]
    Consensus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilizabilityVerdict {
    pub lhs: f64,
    pub feasible: bool,
    pub condition: Condition,
    pub sufficient_only: bool,
}

impl StabilizabilityVerdict {
    fn new(lhs: f64, condition: Condition) -> Self {
        Self {
            lhs,
            feasible: lhs < 1.0,
            condition,
            sufficient_only: condition == Condition::CaseTwo,
        }
    }
}

/// Raw left-hand side of the minimum-phase condition, no range checks.
pub fn case1_lhs(p1: f64, s1sq: f64, s2sq: f64, s12: f64) -> f64 {
    (s1sq - 2.0 * s12) * (p1 * p1 - 1.0) + s2sq * p1 * p1
}

/// Raw left-hand side of the nonminimum-phase sufficient condition.
pub fn case2_lhs(p1: f64, s1: f64, s1sq: f64, s2sq: f64, s12: f64) -> f64 {
    let d = (p1 - s1).powi(2);
    (s1sq - 2.0 * s12 + s2sq) * p1 * p1 * s1 * s1 / d
        + (s1sq * p1 * p1 - 2.0 * s12 * s1 * p1 + s2sq * s1 * s1) / d
}

/// Raw left-hand side of the two-agent consensus condition.
pub fn consensus_lhs(p1: f64, s1sq: f64, s2sq: f64, s12: f64) -> f64 {
    0.25 * (s1sq + 2.0 * s12 + s2sq) * (p1 * p1 - 1.0)
}

pub fn condition_case1(p1: f64, pi: &UncertaintyCovariance) -> Result<StabilizabilityVerdict> {
    FirstOrderPlant::minimum_phase(p1)?;
    let (a, b, c) = pi.triple()?;
    Ok(StabilizabilityVerdict::new(case1_lhs(p1, a, b, c), Condition::CaseOne))
}

pub fn condition_case2(p1: f64, s1: f64, pi: &UncertaintyCovariance) -> Result<StabilizabilityVerdict> {
    FirstOrderPlant::nonminimum_phase(p1, s1)?;
    let (a, b, c) = pi.triple()?;
    Ok(StabilizabilityVerdict::new(case2_lhs(p1, s1, a, b, c), Condition::CaseTwo))
}

pub fn condition_consensus(p1: f64, pi: &UncertaintyCovariance) -> Result<StabilizabilityVerdict> {
    if !(p1.abs() >= 1.0) {
        return Err(Error::StablePlant { p1 });
    }
    let (a, b, c) = pi.triple()?;
    Ok(StabilizabilityVerdict::new(consensus_lhs(p1, a, b, c), Condition::Consensus))
}

/// Mean-square gain of the minimum-phase loop under constant gain `k`.
pub fn f_one(k: f64, p1: f64, pi: &UncertaintyCovariance) -> Result<f64> {
    let (s1sq, s2sq, s12) = pi.triple()?;
    let a = p1 - k;
    if !(a.abs() < 1.0) {
        return Err(Error::ClosedLoopUnstable { k });
    }
    let num = (s1sq - 2.0 * s12) * k * k + 2.0 * s2sq * p1 * k + s2sq * (1.0 - p1 * p1);
    Ok(num / (1.0 - a * a))
}

/// Minimizer `p1 - 1/p1` of [`f_one`].
pub fn optimal_gain_case1(p1: f64) -> Result<f64> {
    FirstOrderPlant::minimum_phase(p1)?;
    Ok(p1 - 1.0 / p1)
}

/// Open interval of gains stabilizing `(z - s1)/(z - p1)`, from the two
/// first-order Jury boundaries where the closed-loop pole hits `+1` and `-1`.
pub fn jury_gain_interval(p1: f64, s1: f64) -> Result<(f64, f64)> {
    if s1.abs() == 1.0 {
        return Err(Error::InvalidZero { s1 });
    }
    if p1 == s1 {
        return Err(Error::PoleZeroCoincidence(p1));
    }
    let at_plus_one = -(1.0 - p1) / (1.0 - s1);
    let at_minus_one = -(1.0 + p1) / (1.0 + s1);
    Ok((at_plus_one.min(at_minus_one), at_plus_one.max(at_minus_one)))
}

/// Mean-square gain of the nonminimum-phase loop, parametrized by the
/// closed-loop pole `x`.
pub fn g_of_x(x: f64, p1: f64, s1: f64, pi: &UncertaintyCovariance) -> Result<f64> {
    if !(x.abs() < 1.0) {
        return Err(Error::PoleOutsideUnitDisk { x });
    }
    if p1 == s1 {
        return Err(Error::PoleZeroCoincidence(p1));
    }
    let (s1sq, s2sq, s12) = pi.triple()?;
    Ok(g_raw(x, p1, s1, s1sq, s2sq, s12))
}

fn g_raw(x: f64, p1: f64, s1: f64, s1sq: f64, s2sq: f64, s12: f64) -> f64 {
    let d = (p1 - s1).powi(2);
    let q = 1.0 - x * x;
    s1sq * (x - p1).powi(2) / d * (1.0 + s1 * s1 - 2.0 * s1 * x) / q
        - 2.0 * s12 * (x - p1) * (x - s1) / d * (1.0 + s1 * p1 - (s1 + p1) * x) / q
        + s2sq * (x - s1).powi(2) / d * (1.0 + p1 * p1 - 2.0 * p1 * x) / q
}

/// Gain that places the nonminimum-phase closed-loop pole at `x`.
pub fn gain_for_pole(x: f64, p1: f64, s1: f64) -> f64 {
    (x - p1) / (s1 - x)
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimization of a unimodal `f` on `[lo, hi]`.
pub(crate) fn golden_section<F>(mut lo: f64, mut hi: f64, tol: f64, mut f: F) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (hi - lo).abs() > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d)?;
        }
    }
    let mid = 0.5 * (lo + hi);
    let fm = f(mid)?;
    let best = [(c, fc), (d, fd), (mid, fm)]
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    Ok(best)
}

/// Grid scan followed by golden-section refinement around the best sample.
/// Ties go to the smallest abscissa.
fn scan_and_refine<F>(lo: f64, hi: f64, grid: usize, refine_tol: f64, f: F) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let grid = grid.max(3);
    let step = (hi - lo) / (grid - 1) as f64;
    let xs: Vec<f64> = (0..grid).map(|i| lo + step * i as f64).collect();
    let vals: Vec<f64> = xs.par_iter().map(|&x| f(x)).collect::<Result<_>>()?;
    let mut best = 0;
    for (i, v) in vals.iter().enumerate() {
        if *v < vals[best] - 1e-12 * vals[best].abs().max(1e-300) {
            best = i;
        }
    }
    let a = xs[best.saturating_sub(1)];
    let b = xs[(best + 1).min(grid - 1)];
    let (x, v) = golden_section(a, b, refine_tol, &f)?;
    if v <= vals[best] {
        Ok((x, v))
    } else {
        Ok((xs[best], vals[best]))
    }
}

/// Minimize `g(x)` over closed-loop poles in `(-1, 1)`.
///
/// This sharpens the sufficient condition, which only evaluates `g(0)`.
pub fn min_g(
    p1: f64,
    s1: f64,
    pi: &UncertaintyCovariance,
    grid: usize,
    refine_tol: f64,
) -> Result<(f64, f64)> {
    FirstOrderPlant::nonminimum_phase(p1, s1)?;
    let (a, b, c) = pi.triple()?;
    let lim = 1.0 - INTERIOR_EPS;
    let (x, g) = scan_and_refine(-lim, lim, grid, refine_tol, |x| Ok(g_raw(x, p1, s1, a, b, c)))?;
    let g0 = g_raw(0.0, p1, s1, a, b, c);
    Ok(if g0 < g { (0.0, g0) } else { (x, g) })
}

/// Two-agent error recursion: one-step second-moment multiplier at gain `k`,
/// `(p1 - 2k)^2 + 4 k^2 s`, with `s = (s1sq + 2 s12 + s2sq) / 4`.
pub fn consensus_contraction(p1: f64, k: f64, pi: &UncertaintyCovariance) -> Result<f64> {
    let (a, b, c) = pi.triple()?;
    let s = 0.25 * (a + 2.0 * c + b);
    Ok((p1 - 2.0 * k).powi(2) + 4.0 * k * k * s)
}

/// Gain minimizing [`consensus_contraction`].
pub fn optimal_consensus_gain(p1: f64, pi: &UncertaintyCovariance) -> Result<f64> {
    if !(p1.abs() >= 1.0) {
        return Err(Error::StablePlant { p1 });
    }
    let (a, b, c) = pi.triple()?;
    let s = 0.25 * (a + 2.0 * c + b);
    Ok(p1 / (2.0 * (1.0 + s)))
}

/// Minimize the general mean-square radius of the closed loop over constant
/// gains inside `interval`.
pub fn gain_search(
    plant: &TransferFunction,
    pi: &UncertaintyCovariance,
    interval: (f64, f64),
    grid: usize,
    grid_points: FrequencyGrid,
) -> Result<(f64, f64)> {
    let (lo, hi) = interval;
    let lo = lo + INTERIOR_EPS;
    let hi = hi - INTERIOR_EPS;
    if !(lo < hi) {
        return Err(Error::NoStabilizingGain);
    }
    let radius = |k: f64| -> Result<f64> {
        let g = closed_loop_block(plant, k)?;
        Ok(is_ms_stable(&g, pi, grid_points)?.rho)
    };
    scan_and_refine(lo, hi, grid, DEFAULT_REFINE_TOL, radius)
}
