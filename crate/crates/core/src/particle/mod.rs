//! Event-driven stochastic simulation of the microscopic dynamics on
//! the torus, with the scaling harness that compares scaled empirical
//! densities against the kinetic solution.

mod density;
mod sim;
mod state;
mod sweep;

pub use density::{bin_average, empirical_density, l1_distance, EmpiricalDensity};
pub use sim::{pair_envelope, proposal_rates, run, Event, ProposalRates, RunResult, Simulator, StepOutcome};
pub use state::{init_poisson_state, EventCounters, SimState, DEFAULT_PARTICLE_CAP};
pub use sweep::{nonincreasing_within_ci, vlasov_sweep, SweepConfig, SweepRow};
