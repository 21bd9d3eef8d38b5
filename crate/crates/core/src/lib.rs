//! Joint destination choice estimation with group-level travel impedance.
//!
//! The pipeline estimates where small groups choose to go given the
//! attractiveness of candidate zones and the travel burden borne by the
//! group. It covers:
//!
//! - a data model for zones, cliques and observed choice situations
//!   ([`domain`]);
//! - per-member travel times with imputed modes, aggregated into five
//!   group-level impedance variables ([`impedance`]);
//! - importance-sampled choice sets drawn from the universal zone set
//!   ([`sampling`]);
//! - multinomial-logit estimation by Newton's method ([`estimator`]);
//! - bootstrap inference, elasticities, k-fold validation, segmentation
//!   and response curves ([`analysis`]);
//! - a synthetic-data generator and parameter-recovery harness
//!   ([`synth`]);
//! - report rendering for the CLI ([`report`]).
//!
//! All randomness flows through seeded, stream-addressed generators
//! ([`rng`]), so every result is reproducible bit-for-bit for a given
//! seed, independent of thread count.

pub mod analysis;
pub mod domain;
pub mod error;
pub mod estimator;
pub mod impedance;
pub mod report;
pub mod rng;
pub mod sampling;
pub mod synth;

pub use error::{Error, Result};
