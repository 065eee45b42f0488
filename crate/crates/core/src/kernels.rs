//! The model's rate kernels and repulsion potentials.
//!
//! Concrete separable Gaussian family on the torus:
//!
//! ```text
//! c1(x, y; z) = q1 · β_σ1(z − x) · β_σ1(z − y)      (coalescence placement)
//! c2(x; y)    = q2 · j_σ2(y − x)                     (jump displacement)
//! φ1(v)       = a1 · exp(−|v|² / (2 w1²))            (coalescence repulsion)
//! φ2(v)       = a2 · exp(−|v|² / (2 w2²))            (jump repulsion)
//! ```
//!
//! with `β`, `j` normalized Gaussian bumps, all wrapped periodically.
//! The family keeps every integral constant in closed form:
//! `<c1> = q1`, `<c2> = q2`, `<φi> = ai (wi √(2π))^d`, and it makes the
//! kinetic right-hand side a chain of convolutions.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{self, Point, Torus};

/// Parameters accepted by [`KernelSet::new`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelParams {
    pub dim: usize,
    pub torus_len: f64,
    /// Coalescence intensity amplitude.
    pub q1: f64,
    /// Coalescence placement width.
    pub sigma1: f64,
    /// Jump intensity amplitude.
    pub q2: f64,
    /// Jump range.
    pub sigma2: f64,
    /// Coalescence repulsion amplitude and range.
    pub a1: f64,
    pub w1: f64,
    /// Jump repulsion amplitude and range.
    pub a2: f64,
    pub w2: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams {
            dim: 1,
            torus_len: 20.0,
            q1: 1.0,
            sigma1: 0.5,
            q2: 1.0,
            sigma2: 0.5,
            a1: 0.0,
            w1: 1.0,
            a2: 0.0,
            w2: 1.0,
        }
    }
}

/// Immutable kernel family with its analytically known integrals.
/// Safe to share across any number of concurrent evaluators.
#[derive(Clone, Copy, Debug)]
pub struct KernelSet {
    params: KernelParams,
    torus: Torus,
    c1_int: f64,
    c2_int: f64,
    phi1_int: f64,
    phi2_int: f64,
}

impl KernelSet {
    pub fn new(p: KernelParams) -> Result<Self> {
        if p.dim != 1 && p.dim != 2 {
            return Err(Error::InvalidParameter {
                name: "dim",
                message: format!("must be 1 or 2, got {}", p.dim),
            });
        }
        for (name, v) in [
            ("sigma1", p.sigma1),
            ("sigma2", p.sigma2),
            ("w1", p.w1),
            ("w2", p.w2),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    message: format!("width must be positive and finite, got {v}"),
                });
            }
        }
        for (name, v) in [("q1", p.q1), ("q2", p.q2), ("a1", p.a1), ("a2", p.a2)] {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    message: format!("amplitude must be nonnegative and finite, got {v}"),
                });
            }
        }
        let max_width = p.sigma1.max(p.sigma2).max(p.w1).max(p.w2);
        if !(p.torus_len > 12.0 * max_width) {
            return Err(Error::InvalidParameter {
                name: "torus_len",
                message: format!(
                    "torus side {} must exceed 12 x the largest kernel width {max_width}",
                    p.torus_len
                ),
            });
        }
        let torus = Torus::new(p.dim, p.torus_len);
        let d = p.dim as i32;
        Ok(KernelSet {
            params: p,
            torus,
            c1_int: p.q1,
            c2_int: p.q2,
            phi1_int: p.a1 * (p.w1 * (2.0 * PI).sqrt()).powi(d),
            phi2_int: p.a2 * (p.w2 * (2.0 * PI).sqrt()).powi(d),
        })
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn torus(&self) -> Torus {
        self.torus
    }

    /// `<c1>`: any double integral of c1 over two of its arguments.
    pub fn c1_int(&self) -> f64 {
        self.c1_int
    }

    /// `<c2>`: the integral of c2 over either argument.
    pub fn c2_int(&self) -> f64 {
        self.c2_int
    }

    pub fn phi1_int(&self) -> f64 {
        self.phi1_int
    }

    pub fn phi2_int(&self) -> f64 {
        self.phi2_int
    }

    /// Coalescence rate density for the pair at `x`, `y` merging at `z`.
    /// Symmetric in `x <-> y` by construction.
    pub fn c1_eval(&self, x: Point, y: Point, z: Point) -> f64 {
        let p = &self.params;
        p.q1 * geometry::wrapped_gauss_density(&self.torus, self.torus.min_image(x, z), p.sigma1)
            * geometry::wrapped_gauss_density(&self.torus, self.torus.min_image(y, z), p.sigma1)
    }

    /// Jump rate density from `x` to `y`.
    pub fn c2_eval(&self, x: Point, y: Point) -> f64 {
        let p = &self.params;
        p.q2 * geometry::wrapped_gauss_density(&self.torus, self.torus.min_image(x, y), p.sigma2)
    }

    /// Coalescence repulsion potential at displacement `v` (wrapped).
    pub fn phi1_eval(&self, v: Point) -> f64 {
        let p = &self.params;
        geometry::wrapped_gauss_bump(&self.torus, v, p.a1, p.w1)
    }

    /// Jump repulsion potential at displacement `v` (wrapped).
    pub fn phi2_eval(&self, v: Point) -> f64 {
        let p = &self.params;
        geometry::wrapped_gauss_bump(&self.torus, v, p.a2, p.w2)
    }

    /// Screening factor `t1_z(u) = exp(-φ1(z - u))`.
    pub fn screen1(&self, z: Point, u: Point) -> f64 {
        (-self.phi1_eval(self.torus.min_image(u, z))).exp()
    }

    /// Screening factor `t2_y(u) = exp(-φ2(y - u))`.
    pub fn screen2(&self, y: Point, u: Point) -> f64 {
        (-self.phi2_eval(self.torus.min_image(u, y))).exp()
    }

    /// Closed form of `∫ c1(x, y; z) dz`: q1 times the Gaussian pair
    /// density of width `σ1 √2` at the separation `x - y` (wrapped).
    pub fn c1_pair_density(&self, x: Point, y: Point) -> f64 {
        let p = &self.params;
        p.q1 * geometry::wrapped_gauss_density(
            &self.torus,
            self.torus.min_image(x, y),
            p.sigma1 * std::f64::consts::SQRT_2,
        )
    }

    /// Smallest width the given sub-model actually exercises; used by
    /// quadrature resolution checks. `None` when no kernel is active.
    pub fn min_active_width(&self) -> Option<f64> {
        let p = &self.params;
        let mut w: Option<f64> = None;
        let mut add = |x: f64| w = Some(w.map_or(x, |cur: f64| cur.min(x)));
        if p.q1 > 0.0 {
            add(p.sigma1);
            if p.a1 > 0.0 {
                add(p.w1);
            }
        }
        if p.q2 > 0.0 {
            add(p.sigma2);
            if p.a2 > 0.0 {
                add(p.w2);
            }
        }
        w
    }
}
