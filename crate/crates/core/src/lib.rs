//! Simulation of the Moran model with directional selection, its ancestral
//! selection graph and line counting process, logistic branching processes,
//! and numerical checks of their Ornstein-Uhlenbeck fluctuation limits.
//!
//! All randomness flows through [`rng::RngStream`], so every result is a
//! function of `(master_seed, stream_index)` alone.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ctmc;
pub mod error;
pub mod limit_verify;
pub mod line_counting;
pub mod logistic;
pub mod moran_asg;
pub mod ou;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use rng::RngStream;
