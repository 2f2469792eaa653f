//! Finite-round LOCC transformations inside SLOCC classes whose
//! representative has a finite local stabilizer.
//!
//! States `g|Ψ_s⟩` are carried by their local operators `G_i = g_i† g_i`.
//! Every question asked of such a state reduces to commutators with the
//! stabilizer factors, small linear programs over the probability simplex,
//! and local-operator simulation.

pub mod analysis;
pub mod classes;
pub mod error;
pub mod feasible;
pub mod groups;
pub mod linalg;
pub mod protocol;
pub mod volumes;

pub use error::{Error, Result};
