//! Simulation and estimation toolkit for a polarization-entangled photon-pair
//! source based on birefringent phase-matched four-wave mixing in
//! polarization-maintaining fiber inside a Sagnac loop.
//!
//! - [`dispersion`]: fused-silica index and the phase-matching solver.
//! - [`quantum_state`]: two-qubit density matrices and entanglement metrics.
//! - [`source_model`]: joint spectral amplitude and the path-overlap model.
//! - [`tomography`]: 36-setting simulation, linear and maximum-likelihood
//!   reconstruction, bootstrap error bars.
//! - [`analysis`]: visibility fringes, configuration and end-to-end runs.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dispersion;
pub mod error;
mod par;
pub mod quantum_state;
pub mod rng;
pub mod source_model;
pub mod tomography;

pub use error::{Error, Result};
