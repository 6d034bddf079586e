//! Multi-stream sequential change detection with e-detectors.
//!
//! Each stream feeds an e-detector ([`evidence`]); at every tick a selection
//! rule ([`procedures`]) turns the vector of detector values into the set of
//! streams declared changed. [`metrics`] scores detection histories against a
//! change configuration and [`simlab`] runs seeded Monte Carlo experiments.

// `!(x >= 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evidence;
pub mod metrics;
pub mod procedures;
pub mod rng;
pub mod simlab;
pub mod stats;

pub use error::{Error, Result};
