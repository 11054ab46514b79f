//! Two-sample testing through regression.
//!
//! Label the pooled sample by group, estimate `m(x) = P(Y = 1 | X = x)` with any
//! regression method and measure how far the estimate strays from the overall
//! proportion of group-1 points. A permutation of the labels calibrates the
//! result; for linear smoothers a chi-squared limit is available as well.

pub mod asymptotic;
pub mod dataset;
pub mod embed;
pub mod error;
pub mod multitest;
pub mod par;
pub mod permutation;
pub mod regressors;
pub mod report;
pub mod rng;
pub mod simulate;
pub mod teststats;

pub use error::{Error, Result};
