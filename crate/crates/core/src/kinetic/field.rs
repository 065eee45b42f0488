//! Density fields on a uniform periodic grid and time-node paths.

use crate::error::{Error, Result};
use crate::geometry::{self, Point, Torus};

/// Uniform periodic grid: `m` nodes per axis on a torus of side `len`.
/// Node `i` sits at the left edge of cell `i`; rectangle-rule quadrature
/// weighs every node by `cell_vol`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub dim: usize,
    pub len: f64,
    pub m: usize,
}

impl Grid {
    pub fn new(dim: usize, len: f64, m: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidParameter {
                name: "dim",
                message: format!("grid dimension must be 1 or 2, got {dim}"),
            });
        }
        if !(len > 0.0) {
            return Err(Error::InvalidParameter {
                name: "torus_len",
                message: format!("must be positive, got {len}"),
            });
        }
        if m < 2 {
            return Err(Error::InvalidParameter {
                name: "grid_pts",
                message: format!("need at least 2 points per axis, got {m}"),
            });
        }
        Ok(Grid { dim, len, m })
    }

    pub fn n_cells(&self) -> usize {
        self.m.pow(self.dim as u32)
    }

    pub fn spacing(&self) -> f64 {
        self.len / self.m as f64
    }

    pub fn cell_vol(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn torus(&self) -> Torus {
        Torus::new(self.dim, self.len)
    }

    /// Coordinates of node `idx` (row-major in two dimensions).
    pub fn node(&self, idx: usize) -> Point {
        let h = self.spacing();
        if self.dim == 1 {
            Point::new_1d(idx as f64 * h)
        } else {
            Point::new_2d((idx / self.m) as f64 * h, (idx % self.m) as f64 * h)
        }
    }

    /// Index of the cell containing a (wrapped) point.
    pub fn cell_of(&self, p: Point) -> usize {
        let t = self.torus();
        let h = self.spacing();
        let mut idx = 0usize;
        for a in 0..self.dim {
            let mut i = (t.wrap_coord(p.coord(a)) / h) as usize;
            if i >= self.m {
                i = self.m - 1;
            }
            idx = idx * self.m + i;
        }
        idx
    }
}

/// Real-valued function on the grid. Represents a density when built
/// through [`DensityField::initial`] (which enforces nonnegativity) and
/// signed fields (differences, right-hand sides) otherwise.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityField {
    grid: Grid,
    values: Vec<f64>,
}

impl DensityField {
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} cells",
                values.len(),
                grid.n_cells()
            )));
        }
        Ok(DensityField { grid, values })
    }

    /// Initial-data constructor: rejects negative or non-finite values.
    pub fn initial(grid: Grid, values: Vec<f64>) -> Result<Self> {
        let field = Self::from_values(grid, values)?;
        for (i, &v) in field.values.iter().enumerate() {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::NegativeDensity {
                    value: v,
                    index: i,
                    tol: 0.0,
                });
            }
        }
        Ok(field)
    }

    pub fn zeros(grid: Grid) -> Self {
        DensityField {
            grid,
            values: vec![0.0; grid.n_cells()],
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        DensityField {
            grid,
            values: vec![c; grid.n_cells()],
        }
    }

    pub fn from_fn<F: FnMut(Point) -> f64>(grid: Grid, mut f: F) -> Self {
        let values = (0..grid.n_cells()).map(|i| f(grid.node(i))).collect();
        DensityField { grid, values }
    }

    /// `baseline + amp * wrapped Gaussian(width)` centered at `center`.
    pub fn gaussian_bump(grid: Grid, baseline: f64, amp: f64, center: Point, width: f64) -> Self {
        let torus = grid.torus();
        Self::from_fn(grid, |p| {
            baseline + geometry::wrapped_gauss_bump(&torus, torus.min_image(center, p), amp, width)
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Total mass `cell_vol * Σ values`.
    pub fn mass(&self) -> f64 {
        self.grid.cell_vol() * self.values.iter().sum::<f64>()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    pub fn linf_diff(&self, other: &DensityField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()))
    }

    pub fn sub(&self, other: &DensityField) -> DensityField {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        DensityField {
            grid: self.grid,
            values,
        }
    }

    /// Value of the cell containing `p` (piecewise-constant view).
    pub fn value_at(&self, p: Point) -> f64 {
        self.values[self.grid.cell_of(p)]
    }

    /// Verify nonnegativity up to round-off; negative values beyond the
    /// tolerance indicate a bug, not data to sanitize.
    pub fn check_nonneg(&self, tol: f64) -> Result<()> {
        for (i, &v) in self.values.iter().enumerate() {
            if v < -tol || !v.is_finite() {
                return Err(Error::NegativeDensity {
                    value: v,
                    index: i,
                    tol,
                });
            }
        }
        Ok(())
    }
}

/// A time-indexed family of fields on uniform nodes `t_k = k Δt`,
/// linearly interpolated between nodes.
#[derive(Clone, Debug)]
pub struct DensityPath {
    dt: f64,
    fields: Vec<DensityField>,
}

impl DensityPath {
    pub fn new(dt: f64, fields: Vec<DensityField>) -> Result<Self> {
        if fields.len() < 2 {
            return Err(Error::InvalidParameter {
                name: "fields",
                message: "a path needs at least two time nodes".into(),
            });
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter {
                name: "dt",
                message: format!("node spacing must be positive, got {dt}"),
            });
        }
        let g0 = fields[0].grid();
        if fields.iter().any(|f| f.grid() != g0) {
            return Err(Error::GridMismatch(
                "all fields of a path must share one grid".into(),
            ));
        }
        Ok(DensityPath { dt, fields })
    }

    /// The constant-in-time path at `rho0` (the Picard starting point).
    pub fn constant_in_time(rho0: &DensityField, t_end: f64, dt: f64) -> Result<Self> {
        let n = nodes_for(t_end, dt)?;
        Self::new(dt, vec![rho0.clone(); n])
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_nodes(&self) -> usize {
        self.fields.len()
    }

    pub fn t_end(&self) -> f64 {
        self.dt * (self.fields.len() - 1) as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.dt * k as f64
    }

    pub fn node(&self, k: usize) -> &DensityField {
        &self.fields[k]
    }

    pub fn fields(&self) -> &[DensityField] {
        &self.fields
    }

    pub fn grid(&self) -> Grid {
        self.fields[0].grid()
    }

    /// Linear interpolation in time (clamped to the path span).
    pub fn eval(&self, t: f64) -> DensityField {
        let k = (t / self.dt).floor();
        let k0 = (k.max(0.0) as usize).min(self.fields.len() - 1);
        if k0 + 1 >= self.fields.len() {
            return self.fields[self.fields.len() - 1].clone();
        }
        let w = (t - self.time(k0)) / self.dt;
        let a = &self.fields[k0];
        let b = &self.fields[k0 + 1];
        let values = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| x * (1.0 - w) + y * w)
            .collect();
        DensityField::from_values(a.grid(), values).expect("same grid")
    }

    pub fn sub(&self, other: &DensityPath) -> Result<DensityPath> {
        if self.fields.len() != other.fields.len() || self.dt != other.dt {
            return Err(Error::GridMismatch(
                "paths differ in node count or spacing".into(),
            ));
        }
        let fields = self
            .fields
            .iter()
            .zip(&other.fields)
            .map(|(a, b)| a.sub(b))
            .collect();
        DensityPath::new(self.dt, fields)
    }

    /// Supremum over nodes of the pointwise distance to another path.
    pub fn linf_dist(&self, other: &DensityPath) -> f64 {
        self.fields
            .iter()
            .zip(&other.fields)
            .fold(0.0f64, |a, (x, y)| a.max(x.linf_diff(y)))
    }
}

/// Number of nodes covering `[0, t_end]` with spacing `dt`; `t_end`
/// must be an integer multiple of `dt` up to round-off.
pub fn nodes_for(t_end: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !(t_end > 0.0) {
        return Err(Error::InvalidParameter {
            name: "dt",
            message: format!("need positive horizon and step, got T = {t_end}, dt = {dt}"),
        });
    }
    let steps = (t_end / dt).round();
    if ((t_end / dt) - steps).abs() > 1e-9 * steps.max(1.0) {
        return Err(Error::InvalidParameter {
            name: "dt",
            message: format!("horizon {t_end} is not a whole number of steps of {dt}"),
        });
    }
    Ok(steps as usize + 1)
}
