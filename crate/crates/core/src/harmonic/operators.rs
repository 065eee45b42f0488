//! Desk-scale evaluators of the microscopic generator `L` acting on
//! observables `F = KG`, and of its quasi-observable conjugate
//! `L̂ = K⁻¹ L K`, both by uniform-grid quadrature of the placement /
//! destination integrals. Their numerical agreement after a K-transform
//! is the conjugation check of the identity battery.

use crate::error::{Error, Result};
use crate::geometry::{Point, Torus};
use crate::harmonic::{k_transform_bounded, star_convolution, Configuration, OrderFunction};
use crate::kernels::KernelSet;

/// Uniform periodic quadrature grid for the `dz` / `dy` integrals.
/// Rectangle rule; spectrally accurate for smooth periodic integrands.
#[derive(Clone, Copy, Debug)]
pub struct QuadGrid {
    /// Points per axis.
    pub m: usize,
}

/// Minimum grid points per kernel width.
const PTS_PER_WIDTH: usize = 8;

impl QuadGrid {
    pub fn new(m: usize) -> Self {
        QuadGrid { m }
    }

    /// Reject grids coarser than an eighth of the smallest active
    /// kernel width.
    pub fn validate(&self, ks: &KernelSet) -> Result<()> {
        let torus = ks.torus();
        let spacing = torus.len / self.m as f64;
        if let Some(width) = ks.min_active_width() {
            if spacing * PTS_PER_WIDTH as f64 > width {
                return Err(Error::GridResolution {
                    spacing,
                    width,
                    required: PTS_PER_WIDTH,
                });
            }
        }
        Ok(())
    }

    /// Grid nodes with their quadrature weight `h^d`.
    pub fn nodes(&self, torus: &Torus) -> Vec<(Point, f64)> {
        let h = torus.len / self.m as f64;
        let w = h.powi(torus.dim as i32);
        let total = self.m.pow(torus.dim as u32);
        (0..total)
            .map(|i| {
                let p = if torus.dim == 1 {
                    Point::new_1d(i as f64 * h)
                } else {
                    Point::new_2d((i / self.m) as f64 * h, (i % self.m) as f64 * h)
                };
                (p, w)
            })
            .collect()
    }
}

/// The coalescence coefficient as a quasi-observable:
/// `C¹_{x,y;z}(η) = c1(x,y;z) · e(t¹_z − 1, η)` with
/// `t¹_z(u) = exp(−φ1(z−u))`. Its K-transform is
/// `c1(x,y;z) e(t¹_z, γ)`, the screened rate.
pub fn big_c1(ks: &KernelSet, x: Point, y: Point, z: Point, eta: &Configuration) -> f64 {
    let c = ks.c1_eval(x, y, z);
    if c == 0.0 {
        return 0.0;
    }
    c * eta.iter().map(|&u| ks.screen1(z, u) - 1.0).product::<f64>()
}

/// The jump coefficient as a quasi-observable:
/// `C²_{x;y}(η) = c2(x;y) · e(t²_y − 1, η)`.
pub fn big_c2(ks: &KernelSet, x: Point, y: Point, eta: &Configuration) -> f64 {
    let c = ks.c2_eval(x, y);
    if c == 0.0 {
        return 0.0;
    }
    c * eta.iter().map(|&u| ks.screen2(y, u) - 1.0).product::<f64>()
}

/// Screened coalescence rate `c̃1(x,y;z;γ) = c1(x,y;z) Π_{u∈rest} t¹_z(u)`
/// where `rest = γ ∖ {x,y}`.
pub fn c1_tilde(ks: &KernelSet, x: Point, y: Point, z: Point, rest: &[Point]) -> f64 {
    let c = ks.c1_eval(x, y, z);
    if c == 0.0 {
        return 0.0;
    }
    let exponent: f64 = rest
        .iter()
        .map(|&u| ks.phi1_eval(ks.torus().min_image(u, z)))
        .sum();
    c * (-exponent).exp()
}

/// Screened jump rate `c̃2(x;y;γ) = c2(x;y) Π_{u∈rest} t²_y(u)` where
/// `rest = γ ∖ x`.
pub fn c2_tilde(ks: &KernelSet, x: Point, y: Point, rest: &[Point]) -> f64 {
    let c = ks.c2_eval(x, y);
    if c == 0.0 {
        return 0.0;
    }
    let exponent: f64 = rest
        .iter()
        .map(|&u| ks.phi2_eval(ks.torus().min_image(u, y)))
        .sum();
    c * (-exponent).exp()
}

const GENERATOR_CAP: usize = 12;
const LHAT_CAP: usize = 8;

/// Quadrature value of `(L K G)(γ)`:
///
/// ```text
/// Σ_{{x,y}⊆γ} ∫ c̃1(x,y;z;γ) [F(γ∖{x,y} ∪ z) − F(γ)] dz
///   + Σ_{x∈γ} ∫ c̃2(x;y;γ) [F(γ∖x ∪ y) − F(γ)] dy,     F = KG.
/// ```
pub fn generator_l_apply(
    g: &OrderFunction,
    gamma: &Configuration,
    ks: &KernelSet,
    quad: QuadGrid,
) -> Result<f64> {
    let n = gamma.len();
    if n > GENERATOR_CAP {
        return Err(Error::CardinalityCap {
            op: "generator_l_apply",
            len: n,
            cap: GENERATOR_CAP,
        });
    }
    quad.validate(ks)?;
    let torus = ks.torus();
    let nodes = quad.nodes(&torus);
    let f_gamma = k_transform_bounded(g, gamma)?;
    let pts = gamma.points().to_vec();
    let mut total = 0.0;

    let q = ks.params();
    if q.q1 > 0.0 {
        for i in 0..n {
            for j in (i + 1)..n {
                let rest = gamma.without_pair(i, j);
                let mut term = 0.0;
                for &(z, w) in &nodes {
                    let rate = c1_tilde(ks, pts[i], pts[j], z, rest.points());
                    if rate == 0.0 {
                        continue;
                    }
                    let f_new = k_transform_bounded(g, &rest.with_point(z))?;
                    term += w * rate * (f_new - f_gamma);
                }
                total += term;
            }
        }
    }
    if q.q2 > 0.0 {
        for i in 0..n {
            let rest = gamma.without_index(i);
            let mut term = 0.0;
            for &(y, w) in &nodes {
                let rate = c2_tilde(ks, pts[i], y, rest.points());
                if rate == 0.0 {
                    continue;
                }
                let f_new = k_transform_bounded(g, &rest.with_point(y))?;
                term += w * rate * (f_new - f_gamma);
            }
            total += term;
        }
    }
    Ok(total)
}

/// Quadrature value of `L̂G(η)` assembled from the coefficient
/// quasi-observables and the finite differences
///
/// ```text
/// H¹_{x,y;z}(ζ) = G(ζ∪z) − G(ζ∪x) − G(ζ∪y) − G(ζ∪{x,y})
/// H²_{x;y}(ζ)   = G(ζ∪y) − G(ζ∪x)
/// ```
///
/// via `L̂G(η) = ∫ Σ_{{x,y}⊆η} [C¹ ⋆ H¹](η∖{x,y}) dz + ∫ Σ_{x∈η} [C² ⋆ H²](η∖x) dy`.
pub fn lhat_apply(
    g: &OrderFunction,
    eta: &Configuration,
    ks: &KernelSet,
    quad: QuadGrid,
) -> Result<f64> {
    let n = eta.len();
    if n > LHAT_CAP {
        return Err(Error::CardinalityCap {
            op: "lhat_apply",
            len: n,
            cap: LHAT_CAP,
        });
    }
    quad.validate(ks)?;
    let torus = ks.torus();
    let nodes = quad.nodes(&torus);
    let pts = eta.points().to_vec();
    let mut total = 0.0;

    let q = ks.params();
    if q.q1 > 0.0 {
        for i in 0..n {
            for j in (i + 1)..n {
                let (x, y) = (pts[i], pts[j]);
                let base = eta.without_pair(i, j);
                let pair = Configuration::from_points(vec![x, y]);
                let mut term = 0.0;
                for &(z, w) in &nodes {
                    let c1 = |zeta: &Configuration| big_c1(ks, x, y, z, zeta);
                    let h1 = |zeta: &Configuration| {
                        g.eval(&zeta.with_point(z)) - g.eval(&zeta.with_point(x))
                            - g.eval(&zeta.with_point(y))
                            - g.eval(&zeta.with_points(pair.points()))
                    };
                    term += w * star_convolution(c1, h1, &base)?;
                }
                total += term;
            }
        }
    }
    if q.q2 > 0.0 {
        for i in 0..n {
            let x = pts[i];
            let base = eta.without_index(i);
            let mut term = 0.0;
            for &(y, w) in &nodes {
                let c2 = |zeta: &Configuration| big_c2(ks, x, y, zeta);
                let h2 = |zeta: &Configuration| {
                    g.eval(&zeta.with_point(y)) - g.eval(&zeta.with_point(x))
                };
                term += w * star_convolution(c2, h2, &base)?;
            }
            total += term;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::{exp_vector, k_transform};
    use crate::kernels::KernelParams;

    fn conf(xs: &[f64]) -> Configuration {
        Configuration::from_points(xs.iter().map(|&x| Point::new_1d(x)).collect())
    }

    fn ks_mixed() -> KernelSet {
        KernelSet::new(KernelParams {
            q1: 1.0,
            sigma1: 0.5,
            q2: 0.8,
            sigma2: 0.6,
            a1: 0.7,
            w1: 0.5,
            a2: 0.4,
            w2: 0.6,
            ..KernelParams::default()
        })
        .unwrap()
    }

    #[test]
    fn big_c1_on_empty_is_bare_kernel() {
        let ks = ks_mixed();
        let (x, y, z) = (Point::new_1d(3.0), Point::new_1d(3.5), Point::new_1d(3.2));
        assert_eq!(big_c1(&ks, x, y, z, &conf(&[])), ks.c1_eval(x, y, z));
    }

    #[test]
    fn big_c1_vanishes_without_potential() {
        let ks = KernelSet::new(KernelParams::default()).unwrap(); // a1 = 0
        let (x, y, z) = (Point::new_1d(3.0), Point::new_1d(3.5), Point::new_1d(3.2));
        assert_eq!(big_c1(&ks, x, y, z, &conf(&[5.0])), 0.0);
        assert_eq!(big_c1(&ks, x, y, z, &conf(&[5.0, 6.0])), 0.0);
    }

    /// `(K C¹_{x,y;z})(γ) = c1(x,y;z) e(t¹_z, γ)`, i.e. the screened
    /// rate of the configuration `γ ∪ {x,y}`.
    #[test]
    fn k_transform_of_big_c1_is_screened_rate() {
        let ks = ks_mixed();
        let (x, y, z) = (Point::new_1d(3.0), Point::new_1d(3.5), Point::new_1d(3.2));
        let gamma = conf(&[2.0, 4.0, 9.0]);
        let lhs = k_transform(|eta| big_c1(&ks, x, y, z, eta), &gamma).unwrap();
        let rhs = ks.c1_eval(x, y, z) * exp_vector(|&u| ks.screen1(z, u), &gamma);
        assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1e-12), "{lhs} vs {rhs}");
        // which equals c̃1 of the enlarged configuration
        let tilde = c1_tilde(&ks, x, y, z, gamma.points());
        assert!((lhs - tilde).abs() <= 1e-10 * tilde.abs().max(1e-12));
    }

    #[test]
    fn generator_annihilates_constants() {
        let ks = ks_mixed();
        let g = OrderFunction::indicator_empty(); // F = KG ≡ 1
        let gamma = conf(&[4.0, 6.0, 6.3]);
        let v = generator_l_apply(&g, &gamma, &ks, QuadGrid::new(512)).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn jump_only_generator_kills_cardinality() {
        // F(γ) = 1 + |γ| is jump-invariant, so the c2-only model gives 0
        let ks = KernelSet::new(KernelParams {
            q1: 0.0,
            q2: 1.0,
            ..KernelParams::default()
        })
        .unwrap();
        // G^(0) = G^(1) ≡ 1 makes KG(γ) = 1 + |γ|
        let g = OrderFunction::new(vec![
            std::sync::Arc::new(|_: &[Point]| 1.0),
            std::sync::Arc::new(|_: &[Point]| 1.0),
        ]);
        let gamma = conf(&[5.0]);
        let v = generator_l_apply(&g, &gamma, &ks, QuadGrid::new(512)).unwrap();
        assert!(v.abs() <= 1e-12, "got {v}");
    }

    /// Two points, coalescence only, F = 1 + |γ|: every merge changes
    /// F by −1, so LF(γ) = −∫ c̃1 dz = −q1 (β⋆β)(x0−x1) when φ1 ≡ 0.
    #[test]
    fn pair_coalescence_closed_form() {
        let ks = KernelSet::new(KernelParams {
            q1: 1.3,
            q2: 0.0,
            a1: 0.0,
            ..KernelParams::default()
        })
        .unwrap();
        let g = OrderFunction::new(vec![
            std::sync::Arc::new(|_: &[Point]| 1.0),
            std::sync::Arc::new(|_: &[Point]| 1.0),
        ]);
        let (x0, x1) = (Point::new_1d(9.7), Point::new_1d(10.4));
        let gamma = Configuration::from_points(vec![x0, x1]);
        let v = generator_l_apply(&g, &gamma, &ks, QuadGrid::new(640)).unwrap();
        let expected = -ks.c1_pair_density(x0, x1);
        assert!(
            (v - expected).abs() <= 1e-8 * expected.abs(),
            "{v} vs {expected}"
        );
    }

    #[test]
    fn lhat_trivial_cases() {
        let ks = ks_mixed();
        let quad = QuadGrid::new(512);
        // empty configuration: no pairs, no particles
        let g = OrderFunction::random(5, 2, ks.torus().len);
        assert_eq!(lhat_apply(&g, &conf(&[]), &ks, quad).unwrap(), 0.0);
        // G = δ_∅ gives L̂G ≡ 0 (all finite differences vanish)
        let d = OrderFunction::indicator_empty();
        for eta in [conf(&[3.0]), conf(&[3.0, 4.0]), conf(&[3.0, 4.0, 4.4])] {
            assert_eq!(lhat_apply(&d, &eta, &ks, quad).unwrap(), 0.0);
        }
    }

    #[test]
    fn quadrature_resolution_rejected() {
        let ks = ks_mixed();
        let g = OrderFunction::random(5, 2, ks.torus().len);
        let err = generator_l_apply(&g, &conf(&[1.0]), &ks, QuadGrid::new(16));
        assert!(matches!(err, Err(Error::GridResolution { .. })));
    }

    /// The conjugation identity K(L̂G) = L(KG) at quadrature resolution.
    #[test]
    fn conjugation_identity_small() {
        let ks = ks_mixed();
        let quad = QuadGrid::new(384);
        let g = OrderFunction::random(42, 2, ks.torus().len);
        for gamma in [conf(&[8.0]), conf(&[8.0, 8.9]), conf(&[8.0, 8.9, 11.0])] {
            let lhs = k_transform(
                |eta| lhat_apply(&g, eta, &ks, quad).unwrap(),
                &gamma,
            )
            .unwrap();
            let rhs = generator_l_apply(&g, &gamma, &ks, quad).unwrap();
            let scale = lhs.abs().max(rhs.abs()).max(1e-12);
            assert!(
                (lhs - rhs).abs() / scale <= 1e-6,
                "|γ|={}: {lhs} vs {rhs}",
                gamma.len()
            );
        }
    }
}
