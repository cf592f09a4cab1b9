use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("no roots defined for a zero or constant polynomial")]
    NoRoots,

    #[error("non-finite coefficient or matrix entry")]
    NonFinite,

    #[error("improper transfer function: numerator degree {num} exceeds denominator degree {den}")]
    Improper { num: usize, den: usize },

    #[error("denominator is the zero polynomial")]
    ZeroDenominator,

    #[error("evaluation at pole: denominator vanishes at omega = {omega}")]
    EvaluationAtPole { omega: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("Lyapunov equation unsolvable, unstable A (spectral radius {rho})")]
    UnstableLyapunov { rho: f64 },

    #[error("H2 undefined for unstable system")]
    UnstableH2,

    #[error("singular loop: 1 + P K vanishes identically")]
    SingularLoop,

    #[error("Theorem 1 requires a stable G (entry ({row}, {col}) has a pole on or outside the unit circle)")]
    UnstableBlock { row: usize, col: usize },

    #[error("quadrature inconsistency: imaginary residue {residue:e} exceeds tolerance relative to {scale:e}")]
    QuadratureInconsistency { residue: f64, scale: f64 },

    #[error("invalid uncertainty covariance: {0}")]
    InvalidCovariance(String),

    #[error("power iteration did not converge after {iters} iterations (last ratios {prev} and {last})")]
    NotConverged { iters: usize, prev: f64, last: f64 },

    #[error("grid must have at least {min} points, got {got}")]
    GridTooSmall { min: usize, got: usize },

    #[error("Theorem 2 requires an unstable plant (|p1| > 1), got p1 = {p1}")]
    StablePlant { p1: f64 },

    #[error("nonminimum-phase zero must satisfy |s1| > 1, got s1 = {s1}")]
    InvalidZero { s1: f64 },

    #[error("pole-zero coincidence: p1 = s1 = {0}")]
    PoleZeroCoincidence(f64),

    #[error("closed loop unstable at K = {k}")]
    ClosedLoopUnstable { k: f64 },

    #[error("closed-loop pole x = {x} must satisfy |x| < 1")]
    PoleOutsideUnitDisk { x: f64 },

    #[error("no stabilizing constant gain")]
    NoStabilizingGain,

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("trajectory too short: need at least 16 samples, got {0}")]
    TrajectoryTooShort(usize),

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
