//! Exact diagonalization of the generalised Dicke model for three-level atoms
//! (Ξ, Λ and V configurations) coupled to one field mode.

pub mod analysis;
pub mod basis;
mod blocktri;
pub mod error;
pub mod model;
pub mod operators;
pub mod protocol;
pub mod rotations;
pub mod solver;

pub use error::{Error, Result};
