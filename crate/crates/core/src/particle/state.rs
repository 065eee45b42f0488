//! Simulation state and Poisson initial data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::kinetic::DensityField;

/// Default cap on the expected particle count of an initial state.
pub const DEFAULT_PARTICLE_CAP: usize = 1_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EventCounters {
    pub proposals: u64,
    pub coalescences: u64,
    pub jumps: u64,
    pub rejections: u64,
}

impl EventCounters {
    pub fn acceptances(&self) -> u64 {
        self.coalescences + self.jumps
    }

    pub fn acceptance_fraction(&self) -> f64 {
        if self.proposals == 0 {
            1.0
        } else {
            self.acceptances() as f64 / self.proposals as f64
        }
    }
}

/// State of one microscopic trajectory: particle positions, simulation
/// clock, the scale parameter, its own random stream, and event
/// bookkeeping. Mutated by exactly one worker at a time.
#[derive(Clone, Debug)]
pub struct SimState {
    pub(crate) positions: Vec<Point>,
    pub(crate) time: f64,
    pub(crate) epsilon: f64,
    pub(crate) rng: ChaCha8Rng,
    pub(crate) seed: u64,
    pub(crate) counters: EventCounters,
}

impl SimState {
    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn n_particles(&self) -> usize {
        self.positions.len()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counters(&self) -> EventCounters {
        self.counters
    }
}

/// Sample the scaled initial law: an inhomogeneous Poisson field with
/// intensity `ρ0(x)/ε`, realized by thinning a homogeneous proposal of
/// intensity `max ρ0 / ε` against the piecewise-constant density.
pub fn init_poisson_state(
    rho0: &DensityField,
    epsilon: f64,
    seed: u64,
    cap: usize,
) -> Result<SimState> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            message: format!("scale parameter must lie in (0, 1], got {epsilon}"),
        });
    }
    rho0.check_nonneg(0.0)?;
    let expected = rho0.mass() / epsilon;
    if expected > cap as f64 {
        return Err(Error::ParticleCap { expected, cap });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let torus = rho0.grid().torus();
    let rho_max = rho0.max();
    let mut positions = Vec::new();
    if rho_max > 0.0 {
        let mean = rho_max * torus.volume() / epsilon;
        let poi = rand_distr::Poisson::new(mean).map_err(|e| Error::InvalidParameter {
            name: "rho0",
            message: e.to_string(),
        })?;
        let n = rng.sample(poi) as usize;
        positions.reserve(n);
        for _ in 0..n {
            let x = torus.sample_uniform(&mut rng);
            if rng.random_range(0.0..1.0) < rho0.value_at(x) / rho_max {
                positions.push(x);
            }
        }
    }
    Ok(SimState {
        positions,
        time: 0.0,
        epsilon,
        rng,
        seed,
        counters: EventCounters::default(),
    })
}
