#![allow(clippy::needless_range_loop)] // indexed loops mirror the matrix math

//! Low-rank plus sparse decomposition lab.
//!
//! The crate builds adversarial matrix families whose best low-rank plus
//! sparse approximations do not exist, certifies their matrix rigidity with
//! a desk-scale oracle, and runs a collection of Robust PCA and matrix
//! completion solvers whose traces expose the diverging-components
//! phenomenon.

pub mod cli;
pub mod construct;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod matrix;
pub mod mc;
pub mod rigidity;
pub mod rng;
pub mod rpca;

pub use error::{Error, Result};
pub use matrix::Matrix;
