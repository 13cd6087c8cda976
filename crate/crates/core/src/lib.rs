//! Bayesian numerics for discretized Navier-Stokes and general state-space models.

pub mod error;
pub mod experiments;
pub mod filters;
pub mod mc_pde;
pub mod metrics;
pub mod particle_learning;
pub mod spectral2d;
pub mod ssm;
pub mod stochastics;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
