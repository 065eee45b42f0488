//! The mesoscopic observable: scaled histograms of particle positions.

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::kinetic::{DensityField, Grid};

/// Histogram over uniform bins aligned with the kinetic grid (each bin
/// is a whole number of grid cells). The estimator of the density is
/// `ε · counts / (bin volume · replicas)`.
#[derive(Clone, Debug)]
pub struct EmpiricalDensity {
    grid: Grid,
    cells_per_bin: usize,
    counts: Vec<u64>,
    replicas: usize,
    epsilon: f64,
}

impl EmpiricalDensity {
    pub fn new(grid: Grid, cells_per_bin: usize, epsilon: f64) -> Result<Self> {
        if cells_per_bin == 0 || grid.m % cells_per_bin != 0 {
            return Err(Error::InvalidParameter {
                name: "cells_per_bin",
                message: format!(
                    "bins must align with the kinetic grid: {} cells per axis, {} per bin",
                    grid.m, cells_per_bin
                ),
            });
        }
        let bins_per_axis = grid.m / cells_per_bin;
        let n_bins = bins_per_axis.pow(grid.dim as u32);
        Ok(EmpiricalDensity {
            grid,
            cells_per_bin,
            counts: vec![0; n_bins],
            replicas: 0,
            epsilon,
        })
    }

    pub fn bins_per_axis(&self) -> usize {
        self.grid.m / self.cells_per_bin
    }

    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_volume(&self) -> f64 {
        let w = self.grid.spacing() * self.cells_per_bin as f64;
        w.powi(self.grid.dim as i32)
    }

    pub fn replicas(&self) -> usize {
        self.replicas
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn bin_of(&self, p: Point) -> usize {
        let cell = self.grid.cell_of(p);
        let b = self.bins_per_axis();
        match self.grid.dim {
            1 => cell / self.cells_per_bin,
            _ => {
                let (cx, cy) = (cell / self.grid.m, cell % self.grid.m);
                (cx / self.cells_per_bin) * b + cy / self.cells_per_bin
            }
        }
    }

    /// Fold one replica's positions into the histogram.
    pub fn add_replica(&mut self, positions: &[Point]) {
        for &p in positions {
            let b = self.bin_of(p);
            self.counts[b] += 1;
        }
        self.replicas += 1;
    }

    /// Left edge (1-d) or left-corner coordinate of a bin.
    pub fn bin_center(&self, b: usize) -> Point {
        let w = self.grid.spacing() * self.cells_per_bin as f64;
        match self.grid.dim {
            1 => Point::new_1d((b as f64 + 0.5) * w),
            _ => {
                let bpa = self.bins_per_axis();
                Point::new_2d(
                    ((b / bpa) as f64 + 0.5) * w,
                    ((b % bpa) as f64 + 0.5) * w,
                )
            }
        }
    }

    /// The density estimator per bin.
    pub fn estimate(&self) -> Result<Vec<f64>> {
        if self.replicas == 0 {
            return Err(Error::EmptyInput("estimator needs at least one replica"));
        }
        let scale = self.epsilon / (self.bin_volume() * self.replicas as f64);
        Ok(self.counts.iter().map(|&c| c as f64 * scale).collect())
    }

    /// `Σ estimator · bin volume`, which equals `ε ·` (mean particle
    /// count per replica) exactly — the counting identity.
    pub fn scaled_mass(&self) -> Result<f64> {
        if self.replicas == 0 {
            return Err(Error::EmptyInput("estimator needs at least one replica"));
        }
        let total: u64 = self.counts.iter().sum();
        Ok(self.epsilon * total as f64 / self.replicas as f64)
    }
}

/// Build the estimator from per-replica snapshots.
pub fn empirical_density(
    snapshots: &[Vec<Point>],
    grid: Grid,
    cells_per_bin: usize,
    epsilon: f64,
) -> Result<EmpiricalDensity> {
    if snapshots.is_empty() {
        return Err(Error::EmptyInput("empirical density needs replicas"));
    }
    let mut h = EmpiricalDensity::new(grid, cells_per_bin, epsilon)?;
    for s in snapshots {
        h.add_replica(s);
    }
    Ok(h)
}

/// Average a grid field over each histogram bin (the reference the
/// estimator is compared against).
pub fn bin_average(field: &DensityField, cells_per_bin: usize) -> Result<Vec<f64>> {
    let grid = field.grid();
    let probe = EmpiricalDensity::new(grid, cells_per_bin, 1.0)?;
    let mut sums = vec![0.0; probe.n_bins()];
    for i in 0..grid.n_cells() {
        sums[probe.bin_of(grid.node(i))] += field.values()[i];
    }
    let per_bin = cells_per_bin.pow(grid.dim as u32) as f64;
    Ok(sums.into_iter().map(|s| s / per_bin).collect())
}

/// `L¹(torus)` distance between the estimator and a binned reference.
pub fn l1_distance(estimate: &[f64], reference: &[f64], bin_volume: f64) -> f64 {
    estimate
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        * bin_volume
}
