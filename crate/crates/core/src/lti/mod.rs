//! Discrete-time rational LTI systems: polynomials, transfer functions,
//! realizations, Lyapunov equations and H2 norms.

pub mod h2;
pub mod poly;
pub mod quad;
pub mod ss;
pub mod tf;

pub use h2::{dlyap, h2_norm_sq, H2Method};
pub use poly::Polynomial;
pub use quad::{FrequencyGrid, DEFAULT_GRID_POINTS};
pub use ss::{to_state_space, transfer_matrix_to_state_space, StateSpace};
pub use tf::{closed_loop_block, TransferFunction, TransferMatrix, STABILITY_TOL};
