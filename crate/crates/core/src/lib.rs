//! Simulation of a two-stage quantum measurement chain.
//!
//! A particle prepared in Σ aᵢ φᵢ is measured by device A, which leaves the
//! pair in the entangled state Σ aᵢ ψᵢ φᵢ; the particle alone is then a
//! mixture diag(|aᵢ|²). Reading device A through device B (and any number of
//! further devices) collapses the whole chain onto ψₖ φₖ with probability
//! |aₖ|², fixing the state of the distant particle without changing its
//! statistics.
//!
//! - [`state`]: dense states, density operators, tensor products, partial traces
//! - [`measurement`]: coupling unitaries, Born probabilities, sampled collapse
//! - [`protocol`]: the chain itself, shot by shot
//! - [`analysis`]: histograms, goodness of fit, correlation and no-signaling checks
//! - [`invariants`], [`config`], [`report`], [`cli`]: the `epr` front end

pub mod analysis;
pub mod cli;
pub mod config;
pub mod error;
pub mod invariants;
pub mod measurement;
pub mod protocol;
pub mod report;
pub mod special;
pub mod state;

pub use error::{Error, Result};
pub use state::C64;
