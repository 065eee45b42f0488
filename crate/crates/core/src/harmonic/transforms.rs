//! The K-transform, its Möbius inverse, and the star-convolution.
//!
//! All three are subset sums over configurations and cost `2^n` (or
//! `3^n` for the convolution); caps keep the enumeration under about
//! a million terms. These are verification tools, not production paths.

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::harmonic::{Configuration, OrderFunction};

/// Largest configuration accepted by the `2^n` subset sums.
pub const K_CAP: usize = 20;
/// Largest configuration accepted by the `3^n` double subset sum.
pub const STAR_CAP: usize = 12;

/// The exponential vector `e(f, η) = Π_{x∈η} f(x)`; empty product is 1.
pub fn exp_vector<F: Fn(&Point) -> f64>(f: F, eta: &Configuration) -> f64 {
    eta.iter().map(f).product()
}

/// `(KG)(γ) = Σ_{η ⊆ γ} G(η)`, the sum of `G` over all `2^|γ|`
/// sub-configurations.
pub fn k_transform<G: Fn(&Configuration) -> f64>(g: G, gamma: &Configuration) -> Result<f64> {
    let n = gamma.len();
    if n > K_CAP {
        return Err(Error::CardinalityCap {
            op: "k_transform",
            len: n,
            cap: K_CAP,
        });
    }
    let mut sum = 0.0;
    for mask in 0..(1u32 << n) {
        sum += g(&gamma.subset_by_mask(mask));
    }
    Ok(sum)
}

/// K-transform of a bounded-order function: enumerates only subsets up
/// to `G.max_order()`, since larger orders contribute nothing.
pub fn k_transform_bounded(g: &OrderFunction, gamma: &Configuration) -> Result<f64> {
    let n = gamma.len();
    if n > K_CAP {
        return Err(Error::CardinalityCap {
            op: "k_transform",
            len: n,
            cap: K_CAP,
        });
    }
    let kmax = g.max_order().min(n);
    let mut sum = g.eval_points(&[]);
    let mut buf: Vec<Point> = Vec::with_capacity(kmax);
    let pts = gamma.points();
    for k in 1..=kmax {
        // lexicographic walk over k-combinations of {0, .., n-1}
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            buf.clear();
            buf.extend(idx.iter().map(|&i| pts[i]));
            sum += g.eval_points(&buf);
            let mut pos = k as isize - 1;
            while pos >= 0 && idx[pos as usize] == n - k + pos as usize {
                pos -= 1;
            }
            if pos < 0 {
                break;
            }
            let p = pos as usize;
            idx[p] += 1;
            for q in p + 1..k {
                idx[q] = idx[q - 1] + 1;
            }
        }
    }
    Ok(sum)
}

/// `(K⁻¹F)(η) = Σ_{ξ ⊆ η} (−1)^{|η∖ξ|} F(ξ)` (Möbius inversion of the
/// subset sum): `k_inverse(k_transform(G), ·)` reproduces `G`.
pub fn k_inverse<F: Fn(&Configuration) -> f64>(f: F, eta: &Configuration) -> Result<f64> {
    let n = eta.len();
    if n > K_CAP {
        return Err(Error::CardinalityCap {
            op: "k_inverse",
            len: n,
            cap: K_CAP,
        });
    }
    let mut sum = 0.0;
    for mask in 0..(1u32 << n) {
        let dropped = n - mask.count_ones() as usize;
        let sign = if dropped % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * f(&eta.subset_by_mask(mask));
    }
    Ok(sum)
}

/// The star-convolution
/// `(G1 ⋆ G2)(η) = Σ_{ξ ⊆ η} G1(ξ) Σ_{ζ ⊆ ξ} G2((η∖ξ) ∪ ζ)`,
/// the product on quasi-observables: `K(G1 ⋆ G2) = (KG1)(KG2)`.
pub fn star_convolution<F1, F2>(g1: F1, g2: F2, eta: &Configuration) -> Result<f64>
where
    F1: Fn(&Configuration) -> f64,
    F2: Fn(&Configuration) -> f64,
{
    let n = eta.len();
    if n > STAR_CAP {
        return Err(Error::CardinalityCap {
            op: "star_convolution",
            len: n,
            cap: STAR_CAP,
        });
    }
    let full: u32 = (1u32 << n) - 1;
    let mut sum = 0.0;
    for xi in 0..=full {
        let g1_val = g1(&eta.subset_by_mask(xi));
        if g1_val == 0.0 {
            continue;
        }
        let rest = full & !xi;
        // iterate all submasks zeta of xi, including 0 and xi itself
        let mut inner = 0.0;
        let mut zeta = xi;
        loop {
            inner += g2(&eta.subset_by_mask(rest | zeta));
            if zeta == 0 {
                break;
            }
            zeta = (zeta - 1) & xi;
        }
        sum += g1_val * inner;
        if xi == full {
            break;
        }
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn conf(xs: &[f64]) -> Configuration {
        Configuration::from_points(xs.iter().map(|&x| Point::new_1d(x)).collect())
    }

    fn test_function(seed: u64, max_order: usize, torus_len: f64) -> OrderFunction {
        OrderFunction::random(seed, max_order, torus_len)
    }

    #[test]
    fn k_transform_counts_singletons() {
        let g = OrderFunction::order_indicator(1);
        let gamma = conf(&[1.0, 2.0, 3.0]);
        assert_eq!(k_transform(|e| g.eval(e), &gamma).unwrap(), 3.0);
        assert_eq!(k_transform_bounded(&g, &gamma).unwrap(), 3.0);
    }

    #[test]
    fn k_transform_of_empty_indicator_is_one() {
        let g = OrderFunction::indicator_empty();
        for gamma in [conf(&[]), conf(&[1.0]), conf(&[1.0, 5.0, 9.0, 13.0])] {
            assert_eq!(k_transform(|e| g.eval(e), &gamma).unwrap(), 1.0);
        }
    }

    #[test]
    fn bounded_path_matches_full_enumeration() {
        let g = test_function(3, 2, 20.0);
        let gamma = conf(&[1.0, 4.0, 9.5, 12.25]);
        let full = k_transform(|e| g.eval(e), &gamma).unwrap();
        let bounded = k_transform_bounded(&g, &gamma).unwrap();
        assert!((full - bounded).abs() <= 1e-12 * full.abs().max(1.0));
    }

    #[test]
    fn cardinality_cap_enforced() {
        let pts: Vec<Point> = (0..21).map(|i| Point::new_1d(i as f64 * 0.3)).collect();
        let gamma = Configuration::from_points(pts);
        assert!(matches!(
            k_transform(|_| 1.0, &gamma),
            Err(Error::CardinalityCap { .. })
        ));
        let pts13: Vec<Point> = (0..13).map(|i| Point::new_1d(i as f64 * 0.3)).collect();
        assert!(star_convolution(|_| 1.0, |_| 1.0, &Configuration::from_points(pts13)).is_err());
    }

    #[test]
    fn k_inverse_of_constant_one() {
        // F ≡ 1 inverts to the indicator of the empty configuration
        assert_eq!(k_inverse(|_| 1.0, &conf(&[])).unwrap(), 1.0);
        for eta in [conf(&[1.0]), conf(&[1.0, 2.0]), conf(&[0.5, 2.0, 7.0, 9.0])] {
            assert_eq!(k_inverse(|_| 1.0, &eta).unwrap(), 0.0);
        }
    }

    #[test]
    fn k_inverse_of_kprod_recovers_exponential_vector() {
        // K(e(f,·)) = e(1+f,·), so K⁻¹ of e(1+f,·) must be e(f,·)
        let f = |p: &Point| 0.3 * (p.coord(0) * 0.7).cos();
        let eta = conf(&[0.4, 3.0, 11.0]);
        let lhs = k_inverse(|xi| exp_vector(|p| 1.0 + f(p), xi), &eta).unwrap();
        let rhs = exp_vector(f, &eta);
        assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
    }

    #[test]
    fn exp_vector_basics() {
        assert_eq!(exp_vector(|_| 1.0, &conf(&[1.0, 2.0, 3.0])), 1.0);
        assert_eq!(exp_vector(|p| p.coord(0), &conf(&[])), 1.0);
        let eta = conf(&[2.0, 3.0, 5.0]);
        assert_eq!(exp_vector(|p| p.coord(0), &eta), 30.0);
    }

    #[test]
    fn star_of_empty_indicators() {
        let d = OrderFunction::indicator_empty();
        let v = star_convolution(|e| d.eval(e), |e| d.eval(e), &conf(&[])).unwrap();
        assert_eq!(v, 1.0);
        let v = star_convolution(|e| d.eval(e), |e| d.eval(e), &conf(&[1.0, 2.0])).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn kstar_identity_small() {
        // K(G1 ⋆ G2)(γ) = (KG1)(γ) (KG2)(γ)
        let g1 = test_function(11, 2, 20.0);
        let g2 = test_function(12, 2, 20.0);
        let gamma = conf(&[1.0, 6.0, 11.0, 16.0]);
        let conv = |eta: &Configuration| {
            star_convolution(|a| g1.eval(a), |b| g2.eval(b), eta).unwrap()
        };
        let lhs = k_transform(conv, &gamma).unwrap();
        let rhs = k_transform(|e| g1.eval(e), &gamma).unwrap()
            * k_transform(|e| g2.eval(e), &gamma).unwrap();
        assert!(
            (lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0),
            "{lhs} vs {rhs}"
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// Round trip K⁻¹(KG) = G on random configurations.
        #[test]
        fn round_trip_recovers_g(
            seed in 0u64..1000,
            xs in proptest::collection::vec(0.0..20.0f64, 0..=5),
        ) {
            let g = test_function(seed, 3, 20.0);
            let eta = conf(&xs);
            let f = |xi: &Configuration| k_transform(|e| g.eval(e), xi).unwrap();
            let back = k_inverse(f, &eta).unwrap();
            let direct = g.eval(&eta);
            prop_assert!((back - direct).abs() <= 1e-12 * direct.abs().max(1.0));
        }

        /// KProd: K(e(f,·))(γ) equals Π(1 + f) exactly up to reordering.
        #[test]
        fn kprod_identity(
            xs in proptest::collection::vec(0.0..20.0f64, 0..=6),
            amp in -0.9..0.9f64,
        ) {
            let gamma = conf(&xs);
            let f = move |p: &Point| amp * (0.37 * p.coord(0)).sin();
            let lhs = k_transform(|eta| exp_vector(f, eta), &gamma).unwrap();
            let rhs = exp_vector(|p| 1.0 + f(p), &gamma);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
        }
    }
}
