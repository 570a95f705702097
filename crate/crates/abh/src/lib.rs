//! Numerical toolkit for an acoustic black hole treated as an open quantum system.
//!
//! The crate is organised bottom-up:
//!
//! - [`specfun`]: sine / hyperbolic / exponential integrals and quadrature.
//! - [`params`]: physical configuration and derived quantities.
//! - [`profile`]: ring and line velocity profiles, null coordinates, Hawking temperatures.
//! - [`environment`]: ohmic bath spectral density and its kernels.
//! - [`decoherence`]: diffusion coefficients, V-coefficients and decoherence times.
//! - [`characteristics`]: characteristic curves and mode functions of the line profile.
//! - [`correlations`]: Hawking-pair momentum correlations and the open-system correction.
//! - [`langevin_oracle`]: stochastic lattice simulation used as an end-to-end oracle.
//!
//! Units are natural (ħ = k_B = 1) unless a [`params::PhysicalConfig`] says otherwise.

pub mod characteristics;
pub mod correlations;
pub mod decoherence;
pub mod environment;
pub mod error;
pub mod langevin_oracle;
pub mod params;
pub mod profile;
pub mod specfun;

pub use error::{Error, Result};
