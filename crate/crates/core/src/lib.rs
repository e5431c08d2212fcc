//! Statistical assessment of railway safety levels.
//!
//! The crate compares event counts between a reference window and a target
//! window with the exact conditional rate-ratio test and with a Beta-Binomial
//! Bayesian comparator, maps the results to three decision tiers, and
//! simulates compound Poisson accident processes to study the error rates of
//! those decision procedures.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bayes;
pub mod classify;
pub mod cli;
pub mod error;
pub mod ingest;
pub mod probkit;
pub mod rate_ratio;
pub mod reference;
pub mod report;
pub mod simulate;

pub use error::{Error, Result};
