//! Coverage analysis and density optimization for cellular-connected UAVs.

// Negated comparisons deliberately reject NaN inputs.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cli;
pub mod error;
pub mod model;
pub mod optimize;
pub mod sim;
pub mod specfun;
pub mod units;
pub mod validate;

pub use error::{Error, Result};
