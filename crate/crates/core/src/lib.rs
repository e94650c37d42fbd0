//! Simulation and estimation toolkit for measuring receptor-ligand binding
//! kinetics with a Kretschmann plasmonic sensor probed by classical or
//! quantum light.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`optics`] maps an analyte refractive index to the sensor
//!    transmittance with the three-layer Fresnel model.
//! 2. [`kinetics`] turns an angular sensorgram into a transmittance
//!    sensorgram and linearizes it.
//! 3. [`probes`] gives the intensity-difference signal and its noise for
//!    each probe state, and [`simulate`] draws noisy sensorgrams from it.
//! 4. [`fit`] extracts `k_s`, `k_d` and `k_a` from every noisy sensorgram.
//!    The spread of those estimates over the Monte Carlo ensemble is the
//!    estimation precision.
//!
//! [`oracle`] checks the closed-form photon statistics in [`probes`] against
//! exact photon-number distributions in a truncated Fock basis.

// `!(x > 0.0)` guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cases;
pub mod error;
pub mod fit;
pub mod kinetics;
pub mod optics;
pub mod oracle;
mod parallel;
pub mod probes;
pub mod simulate;

pub use error::{Error, Result};
pub use parallel::Execution;
