//! Near-field channel tensor laboratory.
//!
//! This crate simulates extended dielectric targets in the radiating near
//! field of a cross-shaped MIMO array by solving the discretized volume
//! integral equation, assembles per-subcarrier channel matrices into sample
//! tensors, runs classical range-azimuth estimators on them, evaluates
//! localization and classification metrics, provides structured training
//! objectives and a cross-task attention operator as pure functions, and
//! computes the shared-OFDM sensing-communication rate tradeoff.
//!
//! Start with [`array::build_cross_array`] and [`scene::make_procedural_target`],
//! push a placed scene through [`em::simulate_sample`], and hand the result
//! to [`estimators`] and [`metrics`]. The `nfct` binary wraps the same
//! pipeline behind `generate`, `estimate`, `evaluate`, `perturb`,
//! `tradeoff`, and `selfcheck` subcommands.

pub mod array;
pub mod constants;
pub mod error;
pub mod em;
pub mod metrics;
pub mod scene;

pub use error::{Error, Result};
