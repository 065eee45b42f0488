//! Right-hand side of the mesoscopic density equation.
//!
//! With the separable Gaussian kernels every term is a convolution
//! chain. Writing `E1 = exp(−φ1 ⊛ ρ)`, `E2 = exp(−φ2 ⊛ ρ)`,
//! `bρ = β ⊛ ρ` and `bb = β ⋆ β` (closed form: Gaussian of width σ1√2):
//!
//! ```text
//! gain1 = ½ q1 E1 (bρ)²            coalescence into x
//! loss1 = q1 ρ · βᵀ ⊛ (E1 · bρ)    coalescence removing x
//! gain2 = q2 E2 (j ⊛ ρ)            jumps into x
//! loss2 = q2 ρ · (jᵀ ⊛ E2)         jumps out of x
//! total = gain1 − loss1 + gain2 − loss2
//! h     = q1 (bb ⊛ ρ) + q2         unscreened removal intensity
//! R2    = gain1 + q1 ρ (bb⊛ρ − βᵀ⊛(E1·bρ)) + gain2 + q2 ρ (1 − jᵀ⊛E2)
//! ```
//!
//! so that `total = −ρ h + R2` with all four `R2` terms nonnegative.
//! The transpose kernels `βᵀ`, `jᵀ` are index reversals of the same
//! samples, making the jump part an exact discrete adjoint pair: the
//! grid mass of `gain2 − loss2` vanishes to round-off.

use crate::error::{Error, Result};
use crate::geometry;
use crate::kernels::KernelSet;
use crate::kinetic::conv::{ConvMethod, Convolver, PreparedKernel};
use crate::kinetic::field::{DensityField, Grid};

/// Minimum grid points per active kernel width.
const PTS_PER_WIDTH: usize = 8;

/// Which repulsion potential a screening field is built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Potential {
    Coalescence,
    Jump,
}

/// Precomputed kernels and transform plans for one (grid, kernel set)
/// pair. Pure evaluator; safe to share read-only across workers.
pub struct KineticOps {
    ks: KernelSet,
    grid: Grid,
    conv: Convolver,
    beta: PreparedKernel,
    beta_t: PreparedKernel,
    pair_bb: PreparedKernel,
    jump: PreparedKernel,
    jump_t: PreparedKernel,
    phi1: Option<PreparedKernel>,
    phi2: Option<PreparedKernel>,
}

/// The decomposition returned by [`KineticOps::rhs`].
pub struct RhsFields {
    /// Full time derivative.
    pub total: DensityField,
    /// The removal intensity `h = q1 (bb ⊛ ρ) + q2`; bounded below by `<c2>`.
    pub h: DensityField,
    /// The nonnegative part `R2` of the splitting `total = −ρ h + R2`.
    pub r2: DensityField,
    /// Jump gain and loss, kept for conservation diagnostics.
    pub gain2: DensityField,
    pub loss2: DensityField,
}

impl KineticOps {
    pub fn new(ks: KernelSet, grid: Grid, method: ConvMethod) -> Result<Self> {
        let torus = ks.torus();
        if grid.dim != torus.dim || (grid.len - torus.len).abs() > 0.0 {
            return Err(Error::GridMismatch(format!(
                "grid domain ({}, L = {}) does not match the kernel torus ({}, L = {})",
                grid.dim, grid.len, torus.dim, torus.len
            )));
        }
        if let Some(width) = ks.min_active_width() {
            let spacing = grid.spacing();
            if spacing * PTS_PER_WIDTH as f64 > width {
                return Err(Error::GridResolution {
                    spacing,
                    width,
                    required: PTS_PER_WIDTH,
                });
            }
        }
        let conv = Convolver::new(grid, method);
        let p = *ks.params();
        let sample_density = |sigma: f64| -> Vec<f64> {
            (0..grid.n_cells())
                .map(|i| geometry::wrapped_gauss_density(&torus, grid.node(i), sigma))
                .collect()
        };
        let beta = conv.prepare(sample_density(p.sigma1));
        let beta_t = conv.prepare_reversed(&beta);
        let pair_bb = conv.prepare(sample_density(p.sigma1 * std::f64::consts::SQRT_2));
        let jump = conv.prepare(sample_density(p.sigma2));
        let jump_t = conv.prepare_reversed(&jump);
        let phi1 = (p.a1 > 0.0).then(|| {
            conv.prepare(
                (0..grid.n_cells())
                    .map(|i| geometry::wrapped_gauss_bump(&torus, grid.node(i), p.a1, p.w1))
                    .collect(),
            )
        });
        let phi2 = (p.a2 > 0.0).then(|| {
            conv.prepare(
                (0..grid.n_cells())
                    .map(|i| geometry::wrapped_gauss_bump(&torus, grid.node(i), p.a2, p.w2))
                    .collect(),
            )
        });
        Ok(KineticOps {
            ks,
            grid,
            conv,
            beta,
            beta_t,
            pair_bb,
            jump,
            jump_t,
            phi1,
            phi2,
        })
    }

    pub fn kernel_set(&self) -> &KernelSet {
        &self.ks
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    fn check_grid(&self, rho: &DensityField) -> Result<()> {
        if rho.grid() != self.grid {
            return Err(Error::GridMismatch(
                "field grid does not match the operator grid".into(),
            ));
        }
        Ok(())
    }

    fn negativity_tol(rho: &DensityField) -> f64 {
        1e-12 * rho.max_abs().max(1.0)
    }

    /// `E(x) = exp(−(φ ⊛ ρ)(x))`, in `(0, 1]` for densities. The
    /// convolution may round to a tiny negative where it vanishes, so
    /// the exponent is floored at zero.
    pub fn screening_field(&self, rho: &DensityField, which: Potential) -> Result<DensityField> {
        self.check_grid(rho)?;
        rho.check_nonneg(Self::negativity_tol(rho))?;
        let kernel = match which {
            Potential::Coalescence => &self.phi1,
            Potential::Jump => &self.phi2,
        };
        let values = match kernel {
            None => vec![1.0; self.grid.n_cells()],
            Some(k) => self
                .conv
                .convolve(k, rho.values())
                .into_iter()
                .map(|e| (-e.max(0.0)).exp())
                .collect(),
        };
        DensityField::from_values(self.grid, values)
    }

    /// Evaluate the full right-hand side decomposition at a density.
    pub fn rhs(&self, rho: &DensityField) -> Result<RhsFields> {
        self.check_grid(rho)?;
        rho.check_nonneg(Self::negativity_tol(rho))?;
        let p = *self.ks.params();
        let n = self.grid.n_cells();
        let r = rho.values();

        let e1 = self.screening_field(rho, Potential::Coalescence)?;
        let e2 = self.screening_field(rho, Potential::Jump)?;

        let brho = self.conv.convolve(&self.beta, r);
        let bbrho = self.conv.convolve(&self.pair_bb, r);

        // coalescence gain and loss
        let mut gain1 = vec![0.0; n];
        let mut loss1 = vec![0.0; n];
        let mut comp1 = vec![0.0; n];
        if p.q1 > 0.0 {
            let inner: Vec<f64> = e1
                .values()
                .iter()
                .zip(&brho)
                .map(|(e, b)| e * b)
                .collect();
            let screened = self.conv.convolve(&self.beta_t, &inner);
            for i in 0..n {
                gain1[i] = 0.5 * p.q1 * e1.values()[i] * brho[i] * brho[i];
                loss1[i] = p.q1 * r[i] * screened[i];
                comp1[i] = p.q1 * r[i] * (bbrho[i] - screened[i]);
            }
        }

        // jump gain and loss (exact adjoint pair)
        let mut gain2 = vec![0.0; n];
        let mut loss2 = vec![0.0; n];
        let mut comp2 = vec![0.0; n];
        if p.q2 > 0.0 {
            let jrho = self.conv.convolve(&self.jump, r);
            let je2 = self.conv.convolve(&self.jump_t, e2.values());
            for i in 0..n {
                gain2[i] = p.q2 * e2.values()[i] * jrho[i];
                loss2[i] = p.q2 * r[i] * je2[i];
                comp2[i] = p.q2 * r[i] * (1.0 - je2[i]);
            }
        }

        let total: Vec<f64> = (0..n)
            .map(|i| gain1[i] - loss1[i] + gain2[i] - loss2[i])
            .collect();
        let h: Vec<f64> = (0..n).map(|i| p.q1 * bbrho[i] + p.q2).collect();
        let r2: Vec<f64> = (0..n)
            .map(|i| gain1[i] + comp1[i] + gain2[i] + comp2[i])
            .collect();

        Ok(RhsFields {
            total: DensityField::from_values(self.grid, total)?,
            h: DensityField::from_values(self.grid, h)?,
            r2: DensityField::from_values(self.grid, r2)?,
            gain2: DensityField::from_values(self.grid, gain2)?,
            loss2: DensityField::from_values(self.grid, loss2)?,
        })
    }
}
