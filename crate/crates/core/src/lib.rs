//! Numerical laboratory for an individual-based model of hopping and
//! coalescing particles on a periodic domain.
//!
//! The crate has four layers:
//!
//! - [`kernels`]: the translation-invariant Gaussian rate kernels and
//!   repulsion potentials of the model, with exact integral constants.
//! - [`harmonic`]: finite-configuration combinatorics (K-transform,
//!   star-convolution, Lebesgue–Poisson integration, Minlos identities)
//!   and desk-scale evaluators of the microscopic generator `L` and of
//!   its quasi-observable conjugate `L̂ = K⁻¹ L K`.
//! - [`kinetic`]: the mesoscopic density equation on a periodic grid —
//!   spectral convolution right-hand side, the integral-equation Picard
//!   map, the guaranteed contraction horizon, and scalar oracles.
//! - [`particle`]: exact event-driven stochastic simulation of the
//!   microscopic dynamics by rejection thinning, with the scaling
//!   harness comparing empirical densities to the kinetic solution.
//!
//! All randomized operations take explicit seeds and are reproducible
//! bit-for-bit. [`checks`] bundles the identity batteries consumed by
//! the command-line front end and the acceptance suite.

pub mod checks;
pub mod error;
pub mod geometry;
pub mod harmonic;
pub mod kernels;
pub mod kinetic;
pub mod particle;
pub mod seed;

pub use error::{Error, Result};
pub use geometry::{Point, Torus};
pub use kernels::{KernelParams, KernelSet};
