//! Probability kernel: special functions, exact discrete distributions and
//! reproducible random streams.
//!
//! All functions here are pure. A [`RandomStream`] has a single owner;
//! parallel work allocates distinct stream ids instead of sharing one.

pub mod dist;
pub mod special;
pub mod stream;

pub use dist::{binom_lower_tail, binom_pmf, binom_upper_tail, poisson_pmf};
pub use special::{log_gamma, reg_inc_beta, reg_upper_inc_gamma};
pub use stream::{sample_binomial, sample_poisson, RandomStream, StreamKey};
