use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const DEFAULT_GRID_POINTS: usize = 4096;
pub const MIN_GRID_POINTS: usize = 64;

/// Uniform periodic trapezoid grid on `[-pi, pi)`.
///
/// The node set is symmetric under `w -> -w` (modulo `2 pi`), so integrals of
/// conjugate-symmetric integrands come out real up to rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrequencyGrid {
    points: usize,
}

impl FrequencyGrid {
    pub fn new(points: usize) -> Result<Self> {
        if points < MIN_GRID_POINTS {
            return Err(Error::GridTooSmall {
                min: MIN_GRID_POINTS,
                got: points,
            });
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn omega(&self, k: usize) -> f64 {
        -PI + 2.0 * PI * k as f64 / self.points as f64
    }

    pub fn omegas(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(|k| self.omega(k))
    }
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        Self {
            points: DEFAULT_GRID_POINTS,
        }
    }
}
