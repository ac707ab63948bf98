//! Exact diagonalization of transverse-field Ising lattices and mechanical
//! checks of the shielding property of reduced states.

pub mod catalog;
pub mod classical;
pub mod closed_forms;
pub mod csvfmt;
pub mod error;
pub mod lattice;
pub mod operator;
pub mod random;
pub mod scenario;
pub mod shielding;
pub mod spectral;

pub use error::{Error, Result};
