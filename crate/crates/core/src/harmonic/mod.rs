//! Finite-configuration combinatorics and configuration-space harmonic
//! analysis: the K-transform and its inverse, the star-convolution,
//! Lebesgue–Poisson integration, Minlos change-of-variable identities,
//! and desk-scale evaluators of the microscopic generator `L` together
//! with its quasi-observable conjugate `L̂ = K⁻¹ L K`.
//!
//! Everything here is a verification tool: subset sums are exponential
//! in the configuration size and deliberately capped.

mod config;
mod lp;
mod operators;
mod order;
mod transforms;

pub use config::Configuration;
pub use lp::{
    lp_integrate, minlos_one_point, minlos_two_part, minlos_two_point, sample_poisson_config,
    LpEstimate, LpIntegrator, LpMode, MinlosReport,
};
pub use operators::{
    big_c1, big_c2, c1_tilde, c2_tilde, generator_l_apply, lhat_apply, QuadGrid,
};
pub use order::OrderFunction;
pub use transforms::{exp_vector, k_inverse, k_transform, k_transform_bounded, star_convolution};
