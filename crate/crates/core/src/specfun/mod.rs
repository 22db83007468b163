//! Special functions and quadrature.
//!
//! Everything here is a pure function of its arguments.

mod gamma;
mod hyper;
mod quad;

pub use gamma::{gamma, ln_gamma, lower_inc_gamma, rgamma};
pub use hyper::{gauss_2f1_nonpos, hyp2f1_pfaff, hyp2f1_series, inc_beta_cont, SERIES_BUDGET};
pub use quad::{quad_composite, quad_fixed, QuadratureRule};

/// Default Gauss–Legendre order for coverage and density integrals.
pub const DEFAULT_QUAD_ORDER: usize = 64;
