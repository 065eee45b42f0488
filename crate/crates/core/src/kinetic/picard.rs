//! The integral-equation Picard map, the fixed-point solver, and the
//! contraction diagnostics.
//!
//! The map evaluates
//!
//! ```text
//! F(ρ)_t(x) = ρ0(x) e^{−∫₀ᵗ h(ρ_s,x) ds}
//!           + ∫₀ᵗ R2(ρ_s,x) e^{−∫ₛᵗ h(ρ_σ,x) dσ} ds
//! ```
//!
//! nodewise with composite trapezoid rules: the inner accumulations
//! `A_k = ∫₀^{t_k} h` are prefix sums, and the outer integral reuses
//! them through `e^{A_s − A_t}`, giving O(nodes) work per grid point
//! and an output that is nonnegative by construction.

use crate::error::{Error, Result};
use crate::kernels::KernelSet;
use crate::kinetic::field::{nodes_for, DensityField, DensityPath};
use crate::kinetic::horizon::{horizon, PicardHorizon};
use crate::kinetic::rhs::KineticOps;

/// `||ρ||_{T,γ} = max_k e^{−γ <c2> t_k} max_x |ρ_{t_k}(x)|`.
pub fn weighted_norm(path: &DensityPath, gamma: f64, ks: &KernelSet) -> f64 {
    let c2 = ks.c2_int();
    (0..path.n_nodes())
        .map(|k| (-gamma * c2 * path.time(k)).exp() * path.node(k).max_abs())
        .fold(0.0, f64::max)
}

/// Largest exponent fed to `exp` before the map refuses to proceed.
const EXP_CAP: f64 = 700.0;

/// One application of the integral-equation map to a path starting at
/// `rho0`. The output shares the input's time grid and starts at `rho0`
/// exactly.
pub fn picard_map(
    path: &DensityPath,
    rho0: &DensityField,
    ops: &KineticOps,
) -> Result<DensityPath> {
    if rho0.grid() != path.grid() {
        return Err(Error::GridMismatch(
            "initial field grid does not match the path grid".into(),
        ));
    }
    let k_nodes = path.n_nodes();
    let n = path.grid().n_cells();
    let dt = path.dt();

    // h and R2 at every node
    let mut h_nodes = Vec::with_capacity(k_nodes);
    let mut r2_nodes = Vec::with_capacity(k_nodes);
    for k in 0..k_nodes {
        let out = ops.rhs(path.node(k))?;
        h_nodes.push(out.h);
        r2_nodes.push(out.r2);
    }

    // prefix trapezoid of h, then the damped outer trapezoid
    let mut a_prev = vec![0.0; n];
    let mut a_curr = vec![0.0; n];
    let mut s_curr = vec![0.0; n];
    let mut out_fields = Vec::with_capacity(k_nodes);
    out_fields.push(rho0.clone());

    for k in 1..k_nodes {
        let h0 = h_nodes[k - 1].values();
        let h1 = h_nodes[k].values();
        let r20 = r2_nodes[k - 1].values();
        let r21 = r2_nodes[k].values();
        let mut values = vec![0.0; n];
        for i in 0..n {
            let a_new = a_prev[i] + 0.5 * dt * (h0[i] + h1[i]);
            if a_new > EXP_CAP {
                return Err(Error::Unstable {
                    t: dt * k as f64,
                    message: format!(
                        "accumulated removal exponent {a_new:.1} overflows; shorten the horizon"
                    ),
                });
            }
            // S_k = Σ trapezoid of R2_j e^{A_j}
            let s_new = s_curr[i] + 0.5 * dt * (r20[i] * a_prev[i].exp() + r21[i] * a_new.exp());
            values[i] = (-a_new).exp() * (rho0.values()[i] + s_new);
            a_curr[i] = a_new;
            s_curr[i] = s_new;
        }
        std::mem::swap(&mut a_prev, &mut a_curr);
        out_fields.push(DensityField::from_values(path.grid(), values)?);
    }
    DensityPath::new(dt, out_fields)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMethod {
    Picard,
    Rk4,
}

#[derive(Clone, Copy, Debug)]
pub struct SolveConfig {
    pub t_end: f64,
    pub dt: f64,
    pub method: SolveMethod,
    /// Fixed-point tolerance (sup over nodes and grid points).
    pub tol: f64,
    pub max_iter: usize,
    /// When set, Picard refuses horizons beyond the guaranteed `T*` for
    /// the ball radius derived from the initial datum.
    pub enforce_horizon: bool,
    /// Ball radius for the guarantee; default is 1.1 × sup ρ0.
    pub ball_radius: Option<f64>,
    pub gamma_margin: f64,
    pub theta: f64,
}

impl SolveConfig {
    pub fn new(t_end: f64, dt: f64, method: SolveMethod, tol: f64) -> Self {
        SolveConfig {
            t_end,
            dt,
            method,
            tol,
            max_iter: 200,
            enforce_horizon: method == SolveMethod::Picard,
            ball_radius: None,
            gamma_margin: 0.1,
            theta: 0.9,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub path: DensityPath,
    /// Picard iterations used (0 for RK4).
    pub iterations: usize,
    /// Sup-distance between successive iterates.
    pub deltas: Vec<f64>,
    /// Total mass at every node.
    pub mass_trajectory: Vec<f64>,
    /// Guarantee actually enforced, when one was computed.
    pub horizon: Option<PicardHorizon>,
}

/// Solve the density equation from `rho0`.
///
/// Picard iterates the integral-equation map from the constant-in-time
/// path until the sup-node change drops below `tol`. RK4 is the
/// independent cross-check integrator stepping the differential form.
pub fn solve(ops: &KineticOps, rho0: &DensityField, cfg: &SolveConfig) -> Result<SolveOutcome> {
    if rho0.grid() != ops.grid() {
        return Err(Error::GridMismatch(
            "initial field grid does not match the operator grid".into(),
        ));
    }
    rho0.check_nonneg(0.0)?;
    match cfg.method {
        SolveMethod::Picard => solve_picard(ops, rho0, cfg),
        SolveMethod::Rk4 => solve_rk4(ops, rho0, cfg),
    }
}

fn solve_picard(ops: &KineticOps, rho0: &DensityField, cfg: &SolveConfig) -> Result<SolveOutcome> {
    let mut guard = None;
    if cfg.enforce_horizon {
        let sup = rho0.max();
        if sup > 0.0 {
            let r = cfg.ball_radius.unwrap_or(1.1 * sup);
            let hz = horizon(r, ops.kernel_set(), cfg.gamma_margin, cfg.theta)?;
            if cfg.t_end > hz.t_star {
                return Err(Error::InvalidParameter {
                    name: "t_end",
                    message: format!(
                        "{} exceeds the guaranteed contraction horizon T* = {:.6}; \
                         solve in windows or disable the guarantee",
                        cfg.t_end, hz.t_star
                    ),
                });
            }
            guard = Some(hz);
        }
    }

    let mut current = DensityPath::constant_in_time(rho0, cfg.t_end, cfg.dt)?;
    let mut deltas = Vec::new();
    for iter in 1..=cfg.max_iter {
        let next = picard_map(&current, rho0, ops)?;
        let delta = next.linf_dist(&current);
        deltas.push(delta);
        current = next;
        if delta <= cfg.tol {
            let mass_trajectory = current.fields().iter().map(|f| f.mass()).collect();
            for f in current.fields() {
                f.check_nonneg(1e-12 * f.max_abs().max(1.0))?;
            }
            return Ok(SolveOutcome {
                path: current,
                iterations: iter,
                deltas,
                mass_trajectory,
                horizon: guard,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_iter,
        residual: *deltas.last().unwrap_or(&f64::NAN),
    })
}

fn solve_rk4(ops: &KineticOps, rho0: &DensityField, cfg: &SolveConfig) -> Result<SolveOutcome> {
    let k_nodes = nodes_for(cfg.t_end, cfg.dt)?;
    let grid = rho0.grid();
    let n = grid.n_cells();
    let dt = cfg.dt;
    let mass0 = rho0.mass().abs();
    let mut fields = Vec::with_capacity(k_nodes);
    fields.push(rho0.clone());
    let mut y = rho0.clone();

    let stage = |base: &DensityField, k: &DensityField, w: f64| -> Result<DensityField> {
        let values = base
            .values()
            .iter()
            .zip(k.values())
            .map(|(a, b)| a + w * b)
            .collect();
        DensityField::from_values(grid, values)
    };

    for step in 1..k_nodes {
        let k1 = ops.rhs(&y)?.total;
        let k2 = ops.rhs(&stage(&y, &k1, 0.5 * dt)?)?.total;
        let k3 = ops.rhs(&stage(&y, &k2, 0.5 * dt)?)?.total;
        let k4 = ops.rhs(&stage(&y, &k3, dt)?)?.total;
        let mut values = vec![0.0; n];
        for i in 0..n {
            values[i] = y.values()[i]
                + dt / 6.0
                    * (k1.values()[i]
                        + 2.0 * k2.values()[i]
                        + 2.0 * k3.values()[i]
                        + k4.values()[i]);
        }
        y = DensityField::from_values(grid, values)?;
        let mass = y.mass();
        if !mass.is_finite() || mass.abs() > 1e6 * mass0.max(1.0) {
            return Err(Error::Unstable {
                t: dt * step as f64,
                message: format!("mass {mass} after step {step}; reduce dt"),
            });
        }
        fields.push(y.clone());
    }
    let mass_trajectory = fields.iter().map(|f| f.mass()).collect();
    Ok(SolveOutcome {
        path: DensityPath::new(dt, fields)?,
        iterations: 0,
        deltas: Vec::new(),
        mass_trajectory,
        horizon: None,
    })
}

/// Measured contraction ratio
/// `||F(ρ) − F(ψ)||_{T,γ} / ||ρ − ψ||_{T,γ}` for two paths in the ball
/// `B_{T,γ}(r, ρ0)`; by the contraction estimate it must not exceed
/// `C` beyond quadrature slack.
pub fn contraction_ratio(
    rho: &DensityPath,
    psi: &DensityPath,
    rho0: &DensityField,
    ops: &KineticOps,
    hz: &PicardHorizon,
) -> Result<f64> {
    let ks = ops.kernel_set();
    for (name, path) in [("rho", rho), ("psi", psi)] {
        let start_gap = path.node(0).linf_diff(rho0);
        if start_gap > 1e-12 * rho0.max_abs().max(1.0) {
            return Err(Error::InvalidParameter {
                name: "path",
                message: format!("{name} does not start at rho0 (gap {start_gap})"),
            });
        }
        for f in path.fields() {
            f.check_nonneg(1e-12 * f.max_abs().max(1.0))?;
        }
        let wn = weighted_norm(path, hz.gamma, ks);
        if wn > hz.r * (1.0 + 1e-9) {
            return Err(Error::InvalidParameter {
                name: "path",
                message: format!("{name} leaves the ball: ||.|| = {wn} > r = {}", hz.r),
            });
        }
    }
    let diff = rho.sub(psi)?;
    let denom = weighted_norm(&diff, hz.gamma, ks);
    if denom == 0.0 {
        return Err(Error::ZeroDenominator(
            "contraction ratio of identical paths",
        ));
    }
    let fr = picard_map(rho, rho0, ops)?;
    let fp = picard_map(psi, rho0, ops)?;
    let num = weighted_norm(&fr.sub(&fp)?, hz.gamma, ks);
    Ok(num / denom)
}
