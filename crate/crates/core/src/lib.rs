//! Mean-square stability and stabilizability of discrete-time LTI feedback
//! loops perturbed by diagonal, spatially correlated, stochastic
//! multiplicative uncertainty.
//!
//! * [`lti`]: transfer functions, realizations, Lyapunov equations, H2 norms.
//! * [`ms`]: the mean-square small-gain test in Kronecker and cone-operator form.
//! * [`stabilizability`]: closed-form conditions for first-order plants and
//!   the two-agent consensus problem.
//! * [`mc`]: Monte Carlo oracle for the stochastic loops.
//! * [`sweep`]: parameter-region sweeps with CSV/JSON output.
//! * [`cli`]: the `msgain` command-line front end.

pub mod cli;
pub mod error;
pub mod io;
pub mod linalg;
pub mod lti;
pub mod mc;
pub mod ms;
pub mod stabilizability;
pub mod sweep;

pub use error::{Error, Result};
pub use linalg::spectral_radius;
pub use lti::{closed_loop_block, FrequencyGrid, StateSpace, TransferFunction, TransferMatrix};
pub use ms::{MsMethod, MsVerdict, UncertaintyCovariance};
