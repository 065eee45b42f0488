//! Exact event-driven simulation of the microscopic dynamics by
//! rejection thinning.
//!
//! Screening factors are products of `exp(−ε φ) ≤ 1`, so proposing
//! events at the unscreened envelope rates and accepting with the
//! screening product simulates the exact law with no time-step bias:
//!
//! - pair `(i, j)` proposes a coalescence at rate
//!   `ε q1 (β⋆β)(x_i − x_j)` (the closed-form placement integral);
//!   the placement is a Gaussian of width `σ1/√2` at the pair midpoint;
//! - every particle proposes a jump at rate `q2`, displacement `~ j`.
//!
//! The scale `ε` multiplies `c1`, `φ1`, `φ2` and leaves `c2` alone;
//! `ε = 1` is the unscaled model. Per-particle envelope row sums are
//! maintained incrementally (only rates involving moved particles
//! change) with periodic full refreshes against float drift.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::kernels::KernelSet;
use crate::particle::state::SimState;

/// Accepted transitions, with enough geometry for the event log.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Event {
    Coalesce { time: f64, a: Point, b: Point, z: Point },
    Jump { time: f64, from: Point, to: Point },
}

impl Event {
    pub fn time(&self) -> f64 {
        match self {
            Event::Coalesce { time, .. } | Event::Jump { time, .. } => *time,
        }
    }
}

/// What a single stepping attempt produced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepOutcome {
    Accepted(Event),
    Rejected,
    /// Waiting time crossed the horizon; the clock stops there and no
    /// event is applied (exact by memorylessness).
    HorizonReached,
    /// Total proposal rate is zero; the state is frozen.
    Exhausted,
}

/// Unscreened envelope rates of the current state; the verification
/// view of the simulator's internal table.
#[derive(Clone, Debug)]
pub struct ProposalRates {
    /// Row sums `s_i = Σ_{j≠i} ε q1 (β⋆β)(x_i − x_j)`.
    pub pair_row_sums: Vec<f64>,
    /// Total unordered-pair envelope `½ Σ_i s_i`.
    pub pair_total: f64,
    /// Jump envelope per particle (`q2`, unscaled).
    pub jump_each: f64,
}

/// Envelope rate of the unordered pair `(x, y)`.
pub fn pair_envelope(ks: &KernelSet, epsilon: f64, x: Point, y: Point) -> f64 {
    epsilon * ks.c1_pair_density(x, y)
}

/// Recompute the full envelope table in O(N²).
pub fn proposal_rates(state: &SimState, ks: &KernelSet) -> ProposalRates {
    let pts = &state.positions;
    let n = pts.len();
    let mut rows = vec![0.0; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let r = pair_envelope(ks, state.epsilon, pts[i], pts[j]);
            rows[i] += r;
            rows[j] += r;
        }
    }
    let pair_total = 0.5 * rows.iter().sum::<f64>();
    ProposalRates {
        pair_row_sums: rows,
        pair_total,
        jump_each: ks.params().q2,
    }
}

/// Rebuild the row-sum table every this many accepted events.
const REFRESH_PERIOD: u64 = 4096;

/// Owns a trajectory and its incremental rate table.
pub struct Simulator<'k> {
    ks: &'k KernelSet,
    state: SimState,
    rows: Vec<f64>,
    accepted_since_refresh: u64,
}

impl<'k> Simulator<'k> {
    pub fn new(ks: &'k KernelSet, state: SimState) -> Self {
        let rows = proposal_rates(&state, ks).pair_row_sums;
        Simulator {
            ks,
            state,
            rows,
            accepted_since_refresh: 0,
        }
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn into_state(self) -> SimState {
        self.state
    }

    fn refresh_rows(&mut self) {
        self.rows = proposal_rates(&self.state, self.ks).pair_row_sums;
        self.accepted_since_refresh = 0;
    }

    /// Advance by one proposal, capped at `t_cap`.
    pub fn step(&mut self, t_cap: f64) -> Result<StepOutcome> {
        let n = self.state.positions.len();
        if n == 0 {
            return Err(Error::EmptyState);
        }
        let q2 = self.ks.params().q2;
        let pair_total = 0.5 * self.rows.iter().sum::<f64>();
        let total = pair_total + q2 * n as f64;
        if total <= 0.0 {
            return Ok(StepOutcome::Exhausted);
        }
        let wait: f64 = self.state.rng.sample::<f64, _>(Exp1) / total;
        if self.state.time + wait > t_cap {
            self.state.time = t_cap;
            return Ok(StepOutcome::HorizonReached);
        }
        self.state.time += wait;
        self.state.counters.proposals += 1;

        let pick: f64 = self.state.rng.random_range(0.0..total);
        let outcome = if pick < pair_total {
            self.propose_coalescence()
        } else {
            self.propose_jump()
        };
        if matches!(outcome, StepOutcome::Accepted(_)) {
            self.accepted_since_refresh += 1;
            if self.accepted_since_refresh >= REFRESH_PERIOD {
                self.refresh_rows();
            }
        }
        Ok(outcome)
    }

    fn propose_coalescence(&mut self) -> StepOutcome {
        let torus = self.ks.torus();
        let eps = self.state.epsilon;
        let n = self.state.positions.len();

        // stage 1: source particle proportional to its row sum
        let row_total: f64 = self.rows.iter().sum();
        let mut target = self.state.rng.random_range(0.0..row_total);
        let mut i = n - 1;
        for (k, &s) in self.rows.iter().enumerate() {
            if target < s {
                i = k;
                break;
            }
            target -= s;
        }
        // stage 2: partner against a freshly computed row
        let xi = self.state.positions[i];
        let mut fresh = 0.0;
        let mut partner_rates = vec![0.0; n];
        for j in 0..n {
            if j != i {
                let r = pair_envelope(self.ks, eps, xi, self.state.positions[j]);
                partner_rates[j] = r;
                fresh += r;
            }
        }
        if fresh <= 0.0 {
            self.state.counters.rejections += 1;
            return StepOutcome::Rejected;
        }
        let mut target = self.state.rng.random_range(0.0..fresh);
        let mut j = if i == 0 { 1 } else { 0 };
        for (k, &r) in partner_rates.iter().enumerate() {
            if k == i {
                continue;
            }
            if target < r {
                j = k;
                break;
            }
            target -= r;
        }

        // placement: product of the two Gaussians = Gaussian of width
        // σ1/√2 at the pair midpoint (along the minimal image)
        let xj = self.state.positions[j];
        let sigma = self.ks.params().sigma1 / std::f64::consts::SQRT_2;
        let half = torus.min_image(xi, xj);
        let mut z;
        let mut guard = 0;
        loop {
            let mut c = [0.0; 2];
            for a in 0..torus.dim {
                let g: f64 = self.state.rng.sample(StandardNormal);
                c[a] = xi.coord(a) + 0.5 * half.coord(a) + sigma * g;
            }
            z = torus.wrap(Point::from_slice(&c[..torus.dim]));
            // exact collision has probability zero; resample if it happens
            if !self.state.positions.iter().any(|p| *p == z) {
                break;
            }
            guard += 1;
            if guard > 16 {
                break;
            }
        }

        // thinning: accept with the screening product over the rest
        let mut exponent = 0.0;
        for (u, &p) in self.state.positions.iter().enumerate() {
            if u != i && u != j {
                exponent += self.ks.phi1_eval(torus.min_image(p, z));
            }
        }
        let accept_p = (-eps * exponent).exp();
        debug_assert!(accept_p <= 1.0);
        if self.state.rng.random_range(0.0..1.0) >= accept_p {
            self.state.counters.rejections += 1;
            return StepOutcome::Rejected;
        }

        // update rows incrementally, then apply the removal/insertion
        let mut s_new = 0.0;
        for u in 0..n {
            if u == i || u == j {
                continue;
            }
            let pu = self.state.positions[u];
            let r_new = pair_envelope(self.ks, eps, pu, z);
            let delta = r_new
                - pair_envelope(self.ks, eps, pu, xi)
                - pair_envelope(self.ks, eps, pu, xj);
            self.rows[u] = (self.rows[u] + delta).max(0.0);
            s_new += r_new;
        }
        let (hi, lo) = (i.max(j), i.min(j));
        self.state.positions.swap_remove(hi);
        self.rows.swap_remove(hi);
        self.state.positions.swap_remove(lo);
        self.rows.swap_remove(lo);
        self.state.positions.push(z);
        self.rows.push(s_new);
        self.state.counters.coalescences += 1;
        StepOutcome::Accepted(Event::Coalesce {
            time: self.state.time,
            a: xi,
            b: xj,
            z,
        })
    }

    fn propose_jump(&mut self) -> StepOutcome {
        let torus = self.ks.torus();
        let eps = self.state.epsilon;
        let n = self.state.positions.len();
        let i = self.state.rng.random_range(0..n);
        let from = self.state.positions[i];
        let sigma2 = self.ks.params().sigma2;
        let mut c = [0.0; 2];
        for a in 0..torus.dim {
            let g: f64 = self.state.rng.sample(StandardNormal);
            c[a] = from.coord(a) + sigma2 * g;
        }
        let to = torus.wrap(Point::from_slice(&c[..torus.dim]));

        let mut exponent = 0.0;
        for (u, &p) in self.state.positions.iter().enumerate() {
            if u != i {
                exponent += self.ks.phi2_eval(torus.min_image(p, to));
            }
        }
        let accept_p = (-eps * exponent).exp();
        debug_assert!(accept_p <= 1.0);
        if self.state.rng.random_range(0.0..1.0) >= accept_p {
            self.state.counters.rejections += 1;
            return StepOutcome::Rejected;
        }

        let mut s_new = 0.0;
        for u in 0..n {
            if u == i {
                continue;
            }
            let pu = self.state.positions[u];
            let r_new = pair_envelope(self.ks, eps, pu, to);
            let delta = r_new - pair_envelope(self.ks, eps, pu, from);
            self.rows[u] = (self.rows[u] + delta).max(0.0);
            s_new += r_new;
        }
        self.state.positions[i] = to;
        self.rows[i] = s_new;
        self.state.counters.jumps += 1;
        StepOutcome::Accepted(Event::Jump {
            time: self.state.time,
            from,
            to,
        })
    }
}

/// Snapshots of the particle positions at requested times.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub snapshots: Vec<(f64, Vec<Point>)>,
    pub events: Vec<Event>,
    pub final_state: SimState,
}

/// Run the dynamics to `t_end`, recording states at the sorted
/// `snapshot_times`. Deterministic given the state's seed.
pub fn run(
    state: SimState,
    t_end: f64,
    snapshot_times: &[f64],
    ks: &KernelSet,
) -> Result<RunResult> {
    if snapshot_times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter {
            name: "snapshot_times",
            message: "snapshot times must be sorted".into(),
        });
    }
    if snapshot_times.iter().any(|&t| t < 0.0 || t > t_end) {
        return Err(Error::InvalidParameter {
            name: "snapshot_times",
            message: format!("snapshot times must lie in [0, {t_end}]"),
        });
    }
    let mut snapshots: Vec<(f64, Vec<Point>)> = Vec::with_capacity(snapshot_times.len());
    let mut pending = snapshot_times.iter().copied().peekable();
    let mut events = Vec::new();

    if state.positions.is_empty() || t_end == 0.0 {
        for t in pending {
            snapshots.push((t, state.positions.clone()));
        }
        let mut final_state = state;
        final_state.time = t_end.max(final_state.time);
        return Ok(RunResult {
            snapshots,
            events,
            final_state,
        });
    }

    let mut sim = Simulator::new(ks, state);
    loop {
        let before = if pending.peek().is_some() {
            Some(sim.state().positions.clone())
        } else {
            None
        };
        let t_before = sim.state().time;
        let outcome = sim.step(t_end)?;
        let t_after = sim.state().time;
        // the state over [t_before, t_after) is `before`; a snapshot
        // exactly at an event time sees the event applied
        if let Some(before) = before {
            while let Some(&snap) = pending.peek() {
                if snap >= t_before && snap < t_after {
                    snapshots.push((snap, before.clone()));
                    pending.next();
                } else {
                    break;
                }
            }
        }
        match outcome {
            StepOutcome::Accepted(ev) => events.push(ev),
            StepOutcome::Rejected => {}
            StepOutcome::HorizonReached | StepOutcome::Exhausted => break,
        }
    }
    let mut final_state = sim.into_state();
    final_state.time = t_end;
    for t in pending {
        snapshots.push((t, final_state.positions.clone()));
    }
    Ok(RunResult {
        snapshots,
        events,
        final_state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelParams;
    use crate::kinetic::{DensityField, Grid};
    use crate::particle::state::init_poisson_state;

    fn grid(l: f64) -> Grid {
        Grid::new(1, l, 256).unwrap()
    }

    fn jump_only() -> KernelSet {
        KernelSet::new(KernelParams {
            q1: 0.0,
            q2: 1.0,
            sigma2: 0.7,
            ..KernelParams::default()
        })
        .unwrap()
    }

    #[test]
    fn envelope_table_matches_pairwise_sum() {
        let ks = KernelSet::new(KernelParams {
            q1: 1.5,
            sigma1: 0.6,
            q2: 0.0,
            ..KernelParams::default()
        })
        .unwrap();
        let rho = DensityField::constant(grid(20.0), 1.0);
        let state = init_poisson_state(&rho, 1.0, 9, 100_000).unwrap();
        let rates = proposal_rates(&state, &ks);
        let pts = state.positions();
        let mut total = 0.0;
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                total += pair_envelope(&ks, 1.0, pts[i], pts[j]);
            }
        }
        assert!((rates.pair_total - total).abs() <= 1e-10 * total.max(1.0));
        assert_eq!(rates.jump_each, 0.0);
    }

    #[test]
    fn pair_envelope_translation_invariant_and_peak() {
        let ks = KernelSet::new(KernelParams {
            q1: 2.0,
            sigma1: 0.5,
            ..KernelParams::default()
        })
        .unwrap();
        let d = 0.8;
        let a = pair_envelope(&ks, 0.5, Point::new_1d(1.0), Point::new_1d(1.0 + d));
        let b = pair_envelope(&ks, 0.5, Point::new_1d(7.3), Point::new_1d(7.3 + d));
        assert!((a - b).abs() <= 1e-12 * a);
        // at zero separation: ε q1 / (σ1 √2 · √(2π))
        let peak = pair_envelope(&ks, 0.5, Point::new_1d(3.0), Point::new_1d(3.0));
        let expected = 0.5 * 2.0
            / (0.5 * std::f64::consts::SQRT_2 * (2.0 * std::f64::consts::PI).sqrt());
        assert!((peak - expected).abs() <= 1e-12 * expected, "{peak} vs {expected}");
    }

    #[test]
    fn jumps_preserve_cardinality_and_all_accepted_without_potential() {
        let ks = jump_only();
        let rho = DensityField::constant(grid(20.0), 1.0);
        let state = init_poisson_state(&rho, 1.0, 4, 100_000).unwrap();
        let n0 = state.n_particles();
        let out = run(state, 5.0, &[], &ks).unwrap();
        let c = out.final_state.counters();
        assert!(c.jumps > 50, "expected plenty of jumps, got {}", c.jumps);
        assert_eq!(c.rejections, 0, "phi2 = 0 accepts every proposal");
        assert_eq!(c.proposals, c.jumps);
        assert_eq!(out.final_state.n_particles(), n0);
    }

    #[test]
    fn coalescences_decrement_by_one() {
        let ks = KernelSet::new(KernelParams {
            q1: 4.0,
            sigma1: 0.6,
            q2: 0.5,
            a1: 0.3,
            w1: 0.7,
            ..KernelParams::default()
        })
        .unwrap();
        let rho = DensityField::constant(grid(20.0), 2.0);
        let state = init_poisson_state(&rho, 1.0, 11, 100_000).unwrap();
        let n0 = state.n_particles();
        let mut sim = Simulator::new(&ks, state);
        let mut coal = 0u64;
        while sim.state().time < 1.0 {
            let n_before = sim.state().n_particles();
            match sim.step(1.0).unwrap() {
                StepOutcome::Accepted(Event::Coalesce { .. }) => {
                    coal += 1;
                    assert_eq!(sim.state().n_particles(), n_before - 1);
                }
                StepOutcome::Accepted(Event::Jump { .. }) | StepOutcome::Rejected => {
                    assert_eq!(sim.state().n_particles(), n_before);
                }
                StepOutcome::HorizonReached | StepOutcome::Exhausted => break,
            }
        }
        assert!(coal > 10, "expected coalescences, got {coal}");
        assert_eq!(
            sim.state().n_particles() as u64 + coal,
            n0 as u64,
            "each coalescence removes exactly one particle"
        );
        let c = sim.state().counters();
        assert_eq!(c.proposals, c.acceptances() + c.rejections);
        assert!(c.acceptance_fraction() > 0.0 && c.acceptance_fraction() <= 1.0);
    }

    /// Single particle, jumps only: the displacement distribution of
    /// one accepted jump is the Gaussian `j`; Kolmogorov–Smirnov check
    /// over many independent one-jump runs.
    #[test]
    fn single_jump_displacement_distribution() {
        let ks = jump_only();
        let sigma = ks.params().sigma2;
        let torus = ks.torus();
        let events = 100_000;
        let mut displacements = Vec::with_capacity(events);
        let g = grid(20.0);
        for k in 0..events {
            use rand::SeedableRng;
            let mut state = init_poisson_state(&DensityField::zeros(g), 1.0, 0, 10).unwrap();
            state.positions = vec![Point::new_1d(10.0)];
            state.seed = 500_000 + k as u64;
            state.rng = rand_chacha::ChaCha8Rng::seed_from_u64(state.seed);
            let mut sim = Simulator::new(&ks, state);
            loop {
                match sim.step(f64::INFINITY).unwrap() {
                    StepOutcome::Accepted(Event::Jump { from, to, .. }) => {
                        displacements.push(torus.min_image_coord(to.coord(0) - from.coord(0)));
                        break;
                    }
                    StepOutcome::Exhausted | StepOutcome::HorizonReached => unreachable!(),
                    _ => {}
                }
            }
        }
        displacements.sort_by(|a, b| a.total_cmp(b));
        // KS distance against the N(0, σ²) CDF
        let erf = |x: f64| {
            // Abramowitz–Stegun 7.1.26, |err| < 1.5e-7
            let s = if x < 0.0 { -1.0 } else { 1.0 };
            let x = x.abs();
            let t = 1.0 / (1.0 + 0.3275911 * x);
            let y = 1.0
                - (((((1.061405429 * t - 1.453152027) * t) + 1.421413741) * t - 0.284496736) * t
                    + 0.254829592)
                    * t
                    * (-x * x).exp();
            s * y
        };
        let cdf = |x: f64| 0.5 * (1.0 + erf(x / (sigma * std::f64::consts::SQRT_2)));
        let n = displacements.len() as f64;
        let mut ks_stat = 0.0f64;
        for (i, &d) in displacements.iter().enumerate() {
            let f = cdf(d);
            ks_stat = ks_stat.max((f - i as f64 / n).abs());
            ks_stat = ks_stat.max(((i + 1) as f64 / n - f).abs());
        }
        // 99.9% critical value 1.95/sqrt(n), plus slack for the erf approximation
        let crit = 1.95 / n.sqrt() + 2e-6;
        assert!(ks_stat <= crit, "KS statistic {ks_stat} vs {crit}");
    }

    #[test]
    fn same_seed_reproduces_event_log() {
        let ks = KernelSet::new(KernelParams {
            q1: 2.0,
            sigma1: 0.6,
            q2: 1.0,
            a1: 0.4,
            w1: 0.7,
            a2: 0.2,
            w2: 0.8,
            ..KernelParams::default()
        })
        .unwrap();
        let rho = DensityField::constant(grid(20.0), 1.5);
        let mk = || init_poisson_state(&rho, 1.0, 31337, 100_000).unwrap();
        let a = run(mk(), 0.7, &[0.2, 0.5], &ks).unwrap();
        let b = run(mk(), 0.7, &[0.2, 0.5], &ks).unwrap();
        assert_eq!(a.events, b.events, "bit-for-bit identical trajectories");
        assert_eq!(a.snapshots.len(), b.snapshots.len());
        for ((ta, pa), (tb, pb)) in a.snapshots.iter().zip(&b.snapshots) {
            assert_eq!(ta, tb);
            assert_eq!(pa, pb);
        }
        assert_eq!(a.final_state.counters(), b.final_state.counters());
    }

    #[test]
    fn zero_horizon_returns_initial_only() {
        let ks = jump_only();
        let rho = DensityField::constant(grid(20.0), 1.0);
        let state = init_poisson_state(&rho, 1.0, 5, 100_000).unwrap();
        let n0 = state.n_particles();
        let out = run(state, 0.0, &[0.0], &ks).unwrap();
        assert_eq!(out.events.len(), 0);
        assert_eq!(out.snapshots.len(), 1);
        assert_eq!(out.snapshots[0].1.len(), n0);
    }

    #[test]
    fn empty_state_step_is_an_error() {
        let ks = jump_only();
        let g = grid(20.0);
        let state = init_poisson_state(&DensityField::zeros(g), 1.0, 5, 100).unwrap();
        let mut sim = Simulator::new(&ks, state);
        assert!(matches!(sim.step(1.0), Err(Error::EmptyState)));
    }

    /// Time is nondecreasing and snapshots interleave correctly.
    #[test]
    fn time_monotone_and_snapshots_ordered() {
        let ks = jump_only();
        let rho = DensityField::constant(grid(20.0), 0.8);
        let state = init_poisson_state(&rho, 1.0, 21, 100_000).unwrap();
        let snaps = [0.1, 0.3, 0.5, 0.7, 0.9];
        let out = run(state, 1.0, &snaps, &ks).unwrap();
        assert_eq!(out.snapshots.len(), snaps.len());
        for ((t, _), want) in out.snapshots.iter().zip(&snaps) {
            assert_eq!(t, want);
        }
        let mut prev = 0.0;
        for e in &out.events {
            assert!(e.time() >= prev);
            prev = e.time();
        }
        assert!(out.final_state.time() == 1.0);
    }
}
