//! Antenna dimensioning for MIMO links with incremental-redundancy HARQ.
//!
//! The [`model`] module holds the Gaussian approximation of the log-det
//! mutual information and the resulting outage expressions, [`dimension`]
//! inverts them for antenna counts, [`asymptotic`] gives the outage decay
//! exponent and [`mcsim`] provides Monte Carlo ground truth.

// NaN must fail range checks, hence `!(x > 0.0)` style comparisons.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::excessive_precision,
    clippy::needless_range_loop
)]

pub mod asymptotic;
pub mod dimension;
pub mod error;
pub mod mcsim;
pub mod model;
pub mod specfun;

pub use error::{Error, Result};
