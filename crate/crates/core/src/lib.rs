//! Numerical laboratory for one-dimensional log gases
//!
//! w_n(x) = −Σ_{i≠j} log|x_i − x_j| + n Σ_i V(x_i)
//!
//! with Gibbs law ∝ exp(−β w_n / 2). The crate computes equilibrium
//! measures, weighted Fekete sets, the renormalized energy of periodic
//! configurations (closed form and field quadrature), Metropolis samples of
//! the Gibbs law, and exact or estimated log-partition functions.

pub mod cli;
pub mod error;
pub mod fekete;
pub mod field;
pub mod hamiltonian;
pub mod model;
pub mod partition;
pub mod potential;
pub mod quadrature;
pub mod renorm;
pub mod sampler;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
