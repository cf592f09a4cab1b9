//! Grid sweeps of the closed-form conditions over plant and uncertainty
//! parameters, with boundary refinement for one-dimensional sweeps.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stabilizability::{case1_lhs, case2_lhs, consensus_lhs, Condition};

/// Width below which a boundary bisection stops.
pub const BOUNDARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    Region3d,
    P1Sweep,
    S1Sweep,
    ConsensusRegion,
}

impl std::str::FromStr for SweepMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "region3d" => Ok(Self::Region3d),
            "p1_sweep" => Ok(Self::P1Sweep),
            "s1_sweep" => Ok(Self::S1Sweep),
            "consensus_region" => Ok(Self::ConsensusRegion),
            other => Err(Error::InvalidSweep(format!("unknown mode {other:?}"))),
        }
    }
}

/// Sweepable parameters. `V` is the summed consensus variance
/// `s1sq + 2 s12 + s2sq`, usable only in consensus sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    S1sq,
    S2sq,
    S12,
    P1,
    S1,
    V,
}

impl Param {
    pub fn as_str(&self) -> &'static str {
        match self {
            Param::S1sq => "s1sq",
            Param::S2sq => "s2sq",
            Param::S12 => "s12",
            Param::P1 => "p1",
            Param::S1 => "s1",
            Param::V => "v",
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Param {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "s1sq" => Ok(Param::S1sq),
            "s2sq" => Ok(Param::S2sq),
            "s12" => Ok(Param::S12),
            "p1" => Ok(Param::P1),
            "s1" => Ok(Param::S1),
            "v" => Ok(Param::V),
            other => Err(Error::InvalidSweep(format!("unknown parameter {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: Param,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Axis {
    pub fn new(name: Param, min: f64, max: f64, steps: usize) -> Self {
        Self { name, min, max, steps }
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.steps {
            self.max
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.steps - 1) as f64
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;
    /// `name:min:max:steps`
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::InvalidSweep(format!("axis {s:?} must look like name:min:max:steps"));
        if parts.len() != 4 {
            return Err(bad());
        }
        Ok(Axis {
            name: parts[0].parse()?,
            min: parts[1].parse().map_err(|_| bad())?,
            max: parts[2].parse().map_err(|_| bad())?,
            steps: parts[3].parse().map_err(|_| bad())?,
        })
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub mode: SweepMode,
    #[serde(default)]
    pub axes: Vec<Axis>,
    #[serde(default)]
    pub fixed: BTreeMap<Param, f64>,
    #[serde(default = "default_true")]
    pub psd_filter: bool,
}

/// Default `[0, 1]^3` uncertainty cube, 51 steps per axis.
pub fn default_region_axes() -> Vec<Axis> {
    [Param::S1sq, Param::S2sq, Param::S12]
        .into_iter()
        .map(|p| Axis::new(p, 0.0, 1.0, 51))
        .collect()
}

impl SweepSpec {
    pub fn new(mode: SweepMode, axes: Vec<Axis>, fixed: BTreeMap<Param, f64>, psd_filter: bool) -> Self {
        Self {
            mode,
            axes,
            fixed,
            psd_filter,
        }
    }

    fn axes_or_default(&self) -> Vec<Axis> {
        if self.axes.is_empty() && self.mode == SweepMode::Region3d {
            default_region_axes()
        } else {
            self.axes.clone()
        }
    }

    fn has(&self, axes: &[Axis], p: Param) -> bool {
        axes.iter().any(|a| a.name == p) || self.fixed.contains_key(&p)
    }

    pub fn condition(&self) -> Condition {
        match self.mode {
            SweepMode::ConsensusRegion => Condition::Consensus,
            SweepMode::S1Sweep => Condition::CaseTwo,
            SweepMode::Region3d | SweepMode::P1Sweep => {
                if self.fixed.contains_key(&Param::S1) {
                    Condition::CaseTwo
                } else {
                    Condition::CaseOne
                }
            }
        }
    }

    pub fn validate(&self) -> Result<Vec<Axis>> {
        let axes = self.axes_or_default();
        if axes.is_empty() {
            return Err(Error::InvalidSweep("at least one axis is required".into()));
        }
        for a in &axes {
            if a.steps < 2 {
                return Err(Error::InvalidSweep(format!("axis {} needs at least 2 steps", a.name)));
            }
            if !(a.min.is_finite() && a.max.is_finite() && a.min < a.max) {
                return Err(Error::InvalidSweep(format!(
                    "axis {} needs finite min < max, got [{}, {}]",
                    a.name, a.min, a.max
                )));
            }
            if self.fixed.contains_key(&a.name) {
                return Err(Error::InvalidSweep(format!("{} is both swept and fixed", a.name)));
            }
        }
        for (i, a) in axes.iter().enumerate() {
            if axes[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::InvalidSweep(format!("axis {} repeated", a.name)));
            }
        }
        if let Some((p, v)) = self.fixed.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidSweep(format!("fixed {p} = {v} is not finite")));
        }

        let names: Vec<Param> = axes.iter().map(|a| a.name).collect();
        let only = |allowed: &[Param]| -> Result<()> {
            match names.iter().find(|n| !allowed.contains(n)) {
                Some(n) => Err(Error::InvalidSweep(format!(
                    "axis {n} not allowed in {:?} mode",
                    self.mode
                ))),
                None => Ok(()),
            }
        };
        let triple = [Param::S1sq, Param::S2sq, Param::S12];
        match self.mode {
            SweepMode::Region3d => only(&triple)?,
            SweepMode::P1Sweep => {
                if names != [Param::P1] {
                    return Err(Error::InvalidSweep("p1_sweep takes exactly one axis, p1".into()));
                }
            }
            SweepMode::S1Sweep => {
                if names != [Param::S1] {
                    return Err(Error::InvalidSweep("s1_sweep takes exactly one axis, s1".into()));
                }
            }
            SweepMode::ConsensusRegion => {
                only(&[Param::P1, Param::V, Param::S1sq, Param::S2sq, Param::S12])?;
            }
        }

        let mut required = vec![Param::P1];
        if self.mode == SweepMode::ConsensusRegion {
            if !self.has(&axes, Param::V) {
                required.extend(triple);
            } else if triple.iter().any(|p| self.has(&axes, *p)) {
                return Err(Error::InvalidSweep(
                    "use either v or (s1sq, s2sq, s12) in a consensus sweep, not both".into(),
                ));
            }
        } else {
            required.extend(triple);
            if self.condition() == Condition::CaseTwo {
                required.push(Param::S1);
            }
        }
        if let Some(p) = required.iter().find(|p| !self.has(&axes, **p)) {
            return Err(Error::InvalidSweep(format!("missing value for {p}")));
        }
        Ok(axes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub coordinates: Vec<f64>,
    pub lhs: f64,
    pub feasible: bool,
    pub valid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeasibleSide {
    Below,
    Above,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    pub axis: Param,
    pub value: f64,
    pub feasible_side: FeasibleSide,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub mode: SweepMode,
    pub condition: Condition,
    pub axes: Vec<Axis>,
    pub rows: Vec<SweepRow>,
    pub boundaries: Vec<Boundary>,
    pub valid_count: usize,
    pub feasible_count: usize,
}

struct Evaluator {
    condition: Condition,
    fixed: BTreeMap<Param, f64>,
    names: Vec<Param>,
    psd_filter: bool,
}

impl Evaluator {
    fn param(&self, coords: &[f64], p: Param) -> Option<f64> {
        self.names
            .iter()
            .position(|n| *n == p)
            .map(|i| coords[i])
            .or_else(|| self.fixed.get(&p).copied())
    }

    fn lhs(&self, coords: &[f64]) -> f64 {
        let get = |p| self.param(coords, p).unwrap_or(f64::NAN);
        let p1 = get(Param::P1);
        match self.condition {
            Condition::CaseOne => case1_lhs(p1, get(Param::S1sq), get(Param::S2sq), get(Param::S12)),
            Condition::CaseTwo => case2_lhs(
                p1,
                get(Param::S1),
                get(Param::S1sq),
                get(Param::S2sq),
                get(Param::S12),
            ),
            Condition::Consensus => match self.param(coords, Param::V) {
                // consensus_lhs depends on the triple only through s1sq + 2 s12 + s2sq
                Some(v) => consensus_lhs(p1, v, 0.0, 0.0),
                None => consensus_lhs(p1, get(Param::S1sq), get(Param::S2sq), get(Param::S12)),
            },
        }
    }

    fn valid(&self, coords: &[f64]) -> bool {
        if !self.psd_filter {
            return true;
        }
        if let Some(v) = self.param(coords, Param::V) {
            return v >= 0.0;
        }
        match (
            self.param(coords, Param::S1sq),
            self.param(coords, Param::S2sq),
            self.param(coords, Param::S12),
        ) {
            (Some(a), Some(b), Some(c)) => a >= 0.0 && b >= 0.0 && c * c <= a * b,
            _ => true,
        }
    }

    fn row(&self, coords: Vec<f64>) -> SweepRow {
        let lhs = self.lhs(&coords);
        let valid = self.valid(&coords);
        SweepRow {
            feasible: valid && lhs < 1.0,
            lhs,
            valid,
            coordinates: coords,
        }
    }
}

fn grid_point(axes: &[Axis], mut idx: usize) -> Vec<f64> {
    let mut coords = vec![0.0; axes.len()];
    for (k, a) in axes.iter().enumerate().rev() {
        coords[k] = a.value(idx % a.steps);
        idx /= a.steps;
    }
    coords
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    let axes = spec.validate()?;
    let eval = Evaluator {
        condition: spec.condition(),
        fixed: spec.fixed.clone(),
        names: axes.iter().map(|a| a.name).collect(),
        psd_filter: spec.psd_filter,
    };
    let total = axes
        .iter()
        .try_fold(1usize, |acc, a| acc.checked_mul(a.steps))
        .ok_or_else(|| Error::InvalidSweep("grid too large".into()))?;
    let rows: Vec<SweepRow> = (0..total)
        .into_par_iter()
        .map(|i| eval.row(grid_point(&axes, i)))
        .collect();

    let boundaries = if axes.len() == 1 {
        locate_boundaries(&eval, &axes[0], &rows)
    } else {
        Vec::new()
    };
    Ok(SweepResult {
        mode: spec.mode,
        condition: spec.condition(),
        valid_count: rows.iter().filter(|r| r.valid).count(),
        feasible_count: rows.iter().filter(|r| r.feasible).count(),
        axes,
        rows,
        boundaries,
    })
}

/// Bisect every feasibility flip between adjacent valid grid points.
fn locate_boundaries(eval: &Evaluator, axis: &Axis, rows: &[SweepRow]) -> Vec<Boundary> {
    let mut out = Vec::new();
    for (i, pair) in rows.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        if !(a.valid && b.valid) || a.feasible == b.feasible {
            continue;
        }
        let (mut lo, mut hi) = (axis.value(i), axis.value(i + 1));
        let feasible_lo = a.feasible;
        while hi - lo > BOUNDARY_TOL {
            let mid = 0.5 * (lo + hi);
            if (eval.lhs(&[mid]) < 1.0) == feasible_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push(Boundary {
            axis: axis.name,
            value: 0.5 * (lo + hi),
            feasible_side: if feasible_lo {
                FeasibleSide::Below
            } else {
                FeasibleSide::Above
            },
        });
    }
    out
}

fn condition_label(c: Condition) -> &'static str {
    match c {
        Condition::CaseOne => "C-I",
        Condition::CaseTwo => "C-II",
        Condition::Consensus => "C-cons",
    }
}

/// Seventeen significant digits, scientific notation.
pub fn fmt_real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for a in &self.axes {
            s.push_str(a.name.as_str());
            s.push(',');
        }
        s.push_str("lhs,feasible,valid\n");
        for r in &self.rows {
            for c in &r.coordinates {
                s.push_str(&fmt_real(*c));
                s.push(',');
            }
            let _ = writeln!(s, "{},{},{}", fmt_real(r.lhs), r.feasible, r.valid);
        }
        let _ = writeln!(
            s,
            "# condition={} rows={} valid={} feasible={}",
            condition_label(self.condition),
            self.rows.len(),
            self.valid_count,
            self.feasible_count
        );
        for b in &self.boundaries {
            let side = match b.feasible_side {
                FeasibleSide::Below => "below",
                FeasibleSide::Above => "above",
            };
            let _ = writeln!(s, "# boundary {}={} feasible_{}", b.axis, fmt_real(b.value), side);
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }
}
