//! The mesoscopic density equation on a periodic grid: spectral
//! convolution right-hand side, the integral-equation Picard map with
//! its guaranteed contraction horizon, an independent RK4 integrator,
//! and scalar oracles for homogeneous data.

mod conv;
mod field;
mod horizon;
mod oracle;
mod picard;
mod rhs;

pub use conv::{ConvMethod, Convolver, PreparedKernel};
pub use field::{nodes_for, DensityField, DensityPath, Grid};
pub use horizon::{horizon, lemma1_f, lemma1_fprime0, lemma2_f, PicardHorizon};
pub use oracle::{homogeneous_oracle, integrate_scalar_ode};
pub use picard::{
    contraction_ratio, picard_map, solve, weighted_norm, SolveConfig, SolveMethod, SolveOutcome,
};
pub use rhs::{KineticOps, Potential, RhsFields};
