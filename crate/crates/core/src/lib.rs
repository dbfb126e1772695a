//! Symbol calculus for the Stokes Dirichlet-to-Neumann map on Riemannian
//! manifolds, and boundary recovery of the metric from those symbols.

pub mod cli;
pub mod dump;
pub mod error;
pub mod geometry;
pub mod jets;
pub mod recovery;
pub mod scenario;
pub mod stokes;
pub mod symbols;

pub use error::{Error, Result};
