//! Quasi-observables of bounded order.

use std::sync::Arc;

use rand::Rng;

use crate::geometry::{Point, Torus};
use crate::harmonic::Configuration;

type Component = Arc<dyn Fn(&[Point]) -> f64 + Send + Sync>;

/// A function `G` on finite configurations represented by symmetric
/// components `G^(n)` up to a maximal order; `G` vanishes on larger
/// configurations. Evaluation on a configuration of size `n`
/// dispatches to `G^(n)` applied to the sorted points.
#[derive(Clone)]
pub struct OrderFunction {
    components: Vec<Component>,
}

impl OrderFunction {
    /// `components[n]` is `G^(n)`; the order-0 component receives an
    /// empty slice and must return the constant `G(∅)`.
    pub fn new(components: Vec<Component>) -> Self {
        assert!(!components.is_empty(), "need at least the order-0 component");
        OrderFunction { components }
    }

    /// The indicator of the empty configuration scaled by `c`.
    pub fn constant(c: f64) -> Self {
        OrderFunction {
            components: vec![Arc::new(move |_: &[Point]| c)],
        }
    }

    pub fn indicator_empty() -> Self {
        Self::constant(1.0)
    }

    /// Indicator of `|η| = n` (each `G^(k)` vanishes except `G^(n) ≡ 1`).
    pub fn order_indicator(n: usize) -> Self {
        let mut components: Vec<Component> = Vec::with_capacity(n + 1);
        for k in 0..=n {
            if k == n {
                components.push(Arc::new(|_: &[Point]| 1.0));
            } else {
                components.push(Arc::new(|_: &[Point]| 0.0));
            }
        }
        OrderFunction { components }
    }

    /// The exponential vector `e(f, η) = Π_{x∈η} f(x)` truncated at
    /// `max_order` (zero beyond it).
    pub fn product_of<F>(f: F, max_order: usize) -> Self
    where
        F: Fn(&Point) -> f64 + Send + Sync + 'static,
    {
        let f = Arc::new(f);
        let mut components: Vec<Component> = Vec::with_capacity(max_order + 1);
        for _ in 0..=max_order {
            let f = Arc::clone(&f);
            components.push(Arc::new(move |pts: &[Point]| pts.iter().map(|p| f(p)).product()));
        }
        OrderFunction { components }
    }

    /// A deterministic pseudo-random member of a bounded smooth family,
    /// used by the identity batteries: each component is a sum of
    /// per-point trigonometric feature products (symmetric by
    /// construction, bounded, low wavenumber).
    pub fn random(seed: u64, max_order: usize, torus_len: f64) -> Self {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut comps: Vec<Component> = Vec::with_capacity(max_order + 1);
        let c0: f64 = rng.random_range(-1.0..1.0);
        comps.push(Arc::new(move |_: &[Point]| c0));
        let tau = 2.0 * std::f64::consts::PI / torus_len;
        for _ in 1..=max_order {
            let a: f64 = rng.random_range(-1.0..1.0);
            let b: f64 = rng.random_range(-1.0..1.0);
            let k1 = rng.random_range(1..4) as f64;
            let k2 = rng.random_range(1..4) as f64;
            comps.push(Arc::new(move |pts: &[Point]| {
                let p1: f64 = pts
                    .iter()
                    .map(|p| 1.0 + a * (tau * k1 * p.coord(0)).cos())
                    .product();
                let p2: f64 = pts
                    .iter()
                    .map(|p| b * (tau * k2 * p.coord(0)).sin())
                    .product();
                p1 + p2
            }));
        }
        OrderFunction { components: comps }
    }

    pub fn max_order(&self) -> usize {
        self.components.len() - 1
    }

    pub fn eval(&self, eta: &Configuration) -> f64 {
        self.eval_points(eta.points())
    }

    pub fn eval_points(&self, pts: &[Point]) -> f64 {
        match self.components.get(pts.len()) {
            Some(g) => g(pts),
            None => 0.0,
        }
    }

    /// Spot-check permutation invariance of each component on random
    /// tuples; returns the largest relative asymmetry found (float
    /// products are reordered, so exact zero is not expected).
    pub fn spot_check_symmetry<R: Rng + ?Sized>(
        &self,
        torus: &Torus,
        rng: &mut R,
        cases: usize,
    ) -> f64 {
        let mut worst: f64 = 0.0;
        for n in 2..=self.max_order() {
            for _ in 0..cases {
                let mut pts: Vec<Point> = (0..n).map(|_| torus.sample_uniform(rng)).collect();
                let v = self.eval_points(&pts);
                // one random transposition
                let i = rng.random_range(0..n);
                let mut j = rng.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                pts.swap(i, j);
                let diff = (self.eval_points(&pts) - v).abs() / v.abs().max(1.0);
                worst = worst.max(diff);
            }
        }
        worst
    }
}

impl std::fmt::Debug for OrderFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "OrderFunction(max_order = {})", self.max_order())
    }
}
