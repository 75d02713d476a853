//! Directional curvature functionals of admissible sets and no-gap second-order
//! optimality checks for finite-dimensional and bang-bang control problems.

pub mod bangbang;
pub mod cli;
pub mod cones;
pub mod curvature;
pub mod error;
pub mod expr;
pub mod linalg;
pub mod model;
pub mod problems;
pub mod soc;

pub use error::{Error, Result};
