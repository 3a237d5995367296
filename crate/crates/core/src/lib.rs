//! Mixed-unitary rank of quantum channels: Kraus/Choi representations,
//! rank bounds from the operator system dimension, constructive
//! decompositions in low dimension, Stiefel-manifold search, and a gallery of
//! reference channels.

pub mod channels;
pub mod constructive;
pub mod error;
pub mod format;
pub mod gallery;
mod lapack;
pub mod linalg;
pub mod mu_analysis;
pub mod search;

pub use error::{Error, Result};
pub use linalg::{CMatrix, Tolerance, C64};
