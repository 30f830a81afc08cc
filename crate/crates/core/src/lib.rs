//! Pathline-averaged base flows, first-order perturbation dynamics about them,
//! acoustic/vortical splitting and sound-source diagnostics on periodic grids.

pub mod acoustics;
pub mod baseflow;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod perturbation;
pub mod pipeline;
pub mod scenarios;
pub mod splitting;

pub use error::{Error, Result};
