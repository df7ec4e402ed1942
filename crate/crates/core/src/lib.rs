//! BFGS with noisy function and gradient oracles, using lengthened curvature
//! pairs when the accepted step is shorter than a threshold `l`.

// Negated float comparisons are used on purpose so that NaN is rejected, and
// index loops read closer to the matrix formulas than iterator chains.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod bfgs;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod linesearch;
pub mod problems;

pub use error::{Error, Result};
