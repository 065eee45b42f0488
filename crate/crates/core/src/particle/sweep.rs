//! The scaling harness: runs replica batteries across a ladder of
//! scale parameters and measures the L¹ gap between the scaled
//! empirical density and the kinetic solution.

use rayon::prelude::*;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernels::KernelSet;
use crate::kinetic::{DensityField, DensityPath};
use crate::particle::density::{bin_average, l1_distance, EmpiricalDensity};
use crate::particle::sim::run;
use crate::particle::state::init_poisson_state;
use crate::seed;

/// One row of the sweep error table.
#[derive(Clone, Copy, Debug)]
pub struct SweepRow {
    pub epsilon: f64,
    pub replicas: usize,
    pub mean_particles: f64,
    pub l1_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Set when the requested horizon exceeded the reference path span
    /// (the comparison used the last available node).
    pub flagged: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct SweepConfig {
    pub t_end: f64,
    pub replicas: usize,
    pub cells_per_bin: usize,
    pub bootstrap: usize,
    pub seed: u64,
    pub particle_cap: usize,
}

/// For each `ε` (descending), simulate `replicas` independent
/// trajectories to `t_end`, histogram the final positions, and compare
/// with the kinetic reference at that time. Confidence intervals are
/// 95% bootstrap percentiles over replicas.
pub fn vlasov_sweep(
    ks: &KernelSet,
    rho0: &DensityField,
    epsilons: &[f64],
    reference: &DensityPath,
    cfg: &SweepConfig,
) -> Result<Vec<SweepRow>> {
    if epsilons.is_empty() {
        return Err(Error::EmptyInput("sweep needs at least one epsilon"));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter {
            name: "epsilons",
            message: "scale parameters must be strictly descending".into(),
        });
    }
    if epsilons.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
        return Err(Error::InvalidParameter {
            name: "epsilons",
            message: "scale parameters must lie in (0, 1]".into(),
        });
    }
    if cfg.replicas == 0 {
        return Err(Error::EmptyInput("sweep needs at least one replica"));
    }
    if reference.grid() != rho0.grid() {
        return Err(Error::GridMismatch(
            "reference path and initial field use different grids".into(),
        ));
    }

    // horizon beyond the reference span is flagged, not fatal
    let flagged = cfg.t_end > reference.t_end() * (1.0 + 1e-12);
    let ref_field = reference.eval(cfg.t_end.min(reference.t_end()));
    let ref_bins = bin_average(&ref_field, cfg.cells_per_bin)?;
    let grid = rho0.grid();

    let mut rows = Vec::with_capacity(epsilons.len());
    for (ei, &eps) in epsilons.iter().enumerate() {
        // independent replicas with derived seeds; indexed collect keeps
        // the reduction order fixed regardless of scheduling
        let replica_bins: Vec<Result<(Vec<u64>, usize)>> = (0..cfg.replicas)
            .into_par_iter()
            .map(|r| {
                let s = seed::derive(cfg.seed, &[0x5EED, ei as u64, r as u64]);
                let state = init_poisson_state(rho0, eps, s, cfg.particle_cap)?;
                let out = run(state, cfg.t_end, &[], ks)?;
                let mut hist = EmpiricalDensity::new(grid, cfg.cells_per_bin, eps)?;
                let n = out.final_state.n_particles();
                hist.add_replica(out.final_state.positions());
                Ok((hist.counts().to_vec(), n))
            })
            .collect();

        let mut counts: Vec<Vec<u64>> = Vec::with_capacity(cfg.replicas);
        let mut total_particles = 0usize;
        for r in replica_bins {
            let (c, n) = r?;
            total_particles += n;
            counts.push(c);
        }

        let probe = EmpiricalDensity::new(grid, cfg.cells_per_bin, eps)?;
        let bin_vol = probe.bin_volume();
        let n_bins = probe.n_bins();
        let l1_of = |selected: &[usize]| -> f64 {
            let mut sums = vec![0u64; n_bins];
            for &idx in selected {
                for (b, &c) in counts[idx].iter().enumerate() {
                    sums[b] += c;
                }
            }
            let scale = eps / (bin_vol * selected.len() as f64);
            let est: Vec<f64> = sums.iter().map(|&c| c as f64 * scale).collect();
            l1_distance(&est, &ref_bins, bin_vol)
        };

        let all: Vec<usize> = (0..cfg.replicas).collect();
        let l1 = l1_of(&all);

        let mut boot = Vec::with_capacity(cfg.bootstrap);
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(cfg.seed, &[0xB007, ei as u64]));
        for _ in 0..cfg.bootstrap {
            let resample: Vec<usize> = (0..cfg.replicas)
                .map(|_| rng.random_range(0..cfg.replicas))
                .collect();
            boot.push(l1_of(&resample));
        }
        boot.sort_by(|a, b| a.total_cmp(b));
        let (ci_low, ci_high) = if boot.is_empty() {
            (l1, l1)
        } else {
            let lo = ((boot.len() as f64) * 0.025) as usize;
            let hi = (((boot.len() as f64) * 0.975) as usize).min(boot.len() - 1);
            (boot[lo], boot[hi])
        };

        rows.push(SweepRow {
            epsilon: eps,
            replicas: cfg.replicas,
            mean_particles: total_particles as f64 / cfg.replicas as f64,
            l1_error: l1,
            ci_low,
            ci_high,
            flagged,
        });
    }
    Ok(rows)
}

/// The scaling-limit sanity check: the error column must not increase
/// (within confidence intervals) as `ε` descends.
pub fn nonincreasing_within_ci(rows: &[SweepRow]) -> bool {
    rows.windows(2).all(|w| w[1].ci_low <= w[0].ci_high)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelParams;
    use crate::kinetic::{DensityPath, Grid};

    #[test]
    fn validates_inputs() {
        let ks = KernelSet::new(KernelParams::default()).unwrap();
        let grid = Grid::new(1, 20.0, 64).unwrap();
        let rho0 = DensityField::constant(grid, 0.2);
        let reference =
            DensityPath::constant_in_time(&rho0, 1.0, 0.5).unwrap();
        let cfg = SweepConfig {
            t_end: 1.0,
            replicas: 4,
            cells_per_bin: 8,
            bootstrap: 10,
            seed: 1,
            particle_cap: 10_000,
        };
        let bad_order = vlasov_sweep(&ks, &rho0, &[0.5, 1.0], &reference, &cfg);
        assert!(bad_order.is_err());
        let bad_eps = vlasov_sweep(&ks, &rho0, &[2.0], &reference, &cfg);
        assert!(bad_eps.is_err());
        let no_reps = vlasov_sweep(
            &ks,
            &rho0,
            &[1.0],
            &reference,
            &SweepConfig {
                replicas: 0,
                ..cfg
            },
        );
        assert!(no_reps.is_err());
    }

    /// Zero initial data: every error is exactly zero.
    #[test]
    fn zero_density_gives_zero_errors() {
        let ks = KernelSet::new(KernelParams::default()).unwrap();
        let grid = Grid::new(1, 20.0, 64).unwrap();
        let rho0 = DensityField::zeros(grid);
        let reference = DensityPath::constant_in_time(&rho0, 1.0, 0.5).unwrap();
        let cfg = SweepConfig {
            t_end: 1.0,
            replicas: 3,
            cells_per_bin: 8,
            bootstrap: 8,
            seed: 2,
            particle_cap: 10_000,
        };
        let rows = vlasov_sweep(&ks, &rho0, &[1.0, 0.5], &reference, &cfg).unwrap();
        for row in &rows {
            assert_eq!(row.l1_error, 0.0);
            assert_eq!(row.mean_particles, 0.0);
            assert!(!row.flagged);
        }
        assert!(nonincreasing_within_ci(&rows));
    }

    #[test]
    fn horizon_beyond_reference_is_flagged() {
        let ks = KernelSet::new(KernelParams::default()).unwrap();
        let grid = Grid::new(1, 20.0, 64).unwrap();
        let rho0 = DensityField::zeros(grid);
        let reference = DensityPath::constant_in_time(&rho0, 0.5, 0.25).unwrap();
        let cfg = SweepConfig {
            t_end: 1.0,
            replicas: 2,
            cells_per_bin: 8,
            bootstrap: 4,
            seed: 3,
            particle_cap: 10_000,
        };
        let rows = vlasov_sweep(&ks, &rho0, &[1.0], &reference, &cfg).unwrap();
        assert!(rows[0].flagged);
    }
}
