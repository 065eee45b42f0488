//! Lebesgue–Poisson integration over the finite-volume configuration
//! space, and the Minlos change-of-variable identities.
//!
//! The measure restricted to configurations inside the torus satisfies
//!
//! ```text
//! ∫ G dλ = G(∅) + Σ_{n≥1} (1/n!) ∫_{Λ^n} G^(n)(x1..xn) dx1..dxn
//!        = e^{|Λ|} · E[G(η)],   η ~ Poisson point process, intensity 1,
//! ```
//!
//! which gives the two integration modes: truncated tensor-quadrature
//! series and Monte Carlo against the unit Poisson law.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Point, Torus};
use crate::harmonic::{Configuration, OrderFunction};

/// How [`lp_integrate`] evaluates the measure.
#[derive(Clone, Copy, Debug)]
pub enum LpMode {
    /// Term-by-term tensor quadrature up to order `order_cap`, with a
    /// reported truncation bound (the tail of `Σ |Λ|^n/n! sup|G^(n)|`).
    /// `grid_m` is the number of quadrature points per axis; if `tol`
    /// is set, a truncation bound above it is an error.
    Series {
        order_cap: usize,
        grid_m: usize,
        tol: Option<f64>,
    },
    /// `e^{|Λ|}` times the Poisson(1) sample mean; reports the standard
    /// error of the estimate.
    MonteCarlo { samples: usize, seed: u64 },
}

/// Integration context: the finite volume plus the mode.
#[derive(Clone, Copy, Debug)]
pub struct LpIntegrator {
    pub torus: Torus,
    pub mode: LpMode,
}

/// Value together with its error estimate (truncation bound for the
/// series mode, standard error for Monte Carlo).
#[derive(Clone, Copy, Debug)]
pub struct LpEstimate {
    pub value: f64,
    pub error: f64,
}

/// Sample a homogeneous Poisson configuration of the given intensity:
/// `N ~ Poisson(intensity · |Λ|)` points placed uniformly.
pub fn sample_poisson_config<R: Rng + ?Sized>(
    torus: &Torus,
    intensity: f64,
    rng: &mut R,
) -> Result<Configuration> {
    if intensity < 0.0 || !intensity.is_finite() {
        return Err(Error::InvalidParameter {
            name: "intensity",
            message: format!("must be nonnegative and finite, got {intensity}"),
        });
    }
    let mean = intensity * torus.volume();
    let n = if mean == 0.0 {
        0
    } else {
        let poi = rand_distr::Poisson::new(mean).map_err(|e| Error::InvalidParameter {
            name: "intensity",
            message: e.to_string(),
        })?;
        rng.sample(poi) as usize
    };
    let pts = (0..n).map(|_| torus.sample_uniform(rng)).collect();
    Ok(Configuration::from_points(pts))
}

/// Integrate a bounded-order function against the Lebesgue–Poisson
/// measure restricted to the torus volume.
pub fn lp_integrate(g: &OrderFunction, integ: &LpIntegrator) -> Result<LpEstimate> {
    match integ.mode {
        LpMode::Series {
            order_cap,
            grid_m,
            tol,
        } => lp_series(g, integ.torus, order_cap, grid_m, tol),
        LpMode::MonteCarlo { samples, seed } => lp_monte_carlo(g, integ.torus, samples, seed),
    }
}

fn lp_series(
    g: &OrderFunction,
    torus: Torus,
    order_cap: usize,
    grid_m: usize,
    tol: Option<f64>,
) -> Result<LpEstimate> {
    if grid_m == 0 {
        return Err(Error::InvalidParameter {
            name: "grid_m",
            message: "series quadrature needs at least one point per axis".into(),
        });
    }
    let pts_per_point = grid_m.pow(torus.dim as u32);
    let top = order_cap.min(g.max_order());
    // work estimate for the largest tensor grid
    if (pts_per_point as f64).powi(top as i32) > 2e7 {
        return Err(Error::InvalidParameter {
            name: "order_cap",
            message: format!(
                "tensor quadrature of {pts_per_point}^{top} nodes is above the work cap"
            ),
        });
    }
    let h = torus.len / grid_m as f64;
    let cell = h.powi(torus.dim as i32);
    let grid: Vec<Point> = (0..pts_per_point)
        .map(|i| {
            if torus.dim == 1 {
                Point::new_1d(i as f64 * h)
            } else {
                Point::new_2d((i / grid_m) as f64 * h, (i % grid_m) as f64 * h)
            }
        })
        .collect();

    let mut value = g.eval_points(&[]);
    let mut factorial = 1.0;
    let mut tuple: Vec<Point> = Vec::new();
    for n in 1..=top {
        factorial *= n as f64;
        // odometer over n grid indices
        let mut idx = vec![0usize; n];
        let mut term = 0.0;
        loop {
            tuple.clear();
            tuple.extend(idx.iter().map(|&i| grid[i]));
            term += g.eval_points(&tuple);
            let mut pos = n;
            let rolled_over = loop {
                if pos == 0 {
                    break true;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < pts_per_point {
                    break false;
                }
                idx[pos] = 0;
            };
            if rolled_over {
                break;
            }
        }
        value += term * cell.powi(n as i32) / factorial;
    }

    // truncation bound: tail of Σ |Λ|^n / n! · sup|G^(n)| over dropped orders
    let mut bound = 0.0;
    if order_cap < g.max_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xB0517);
        let vol = torus.volume();
        let mut fact = factorial;
        for n in (top + 1)..=g.max_order() {
            fact *= n as f64;
            let mut sup = 0.0f64;
            for _ in 0..2000 {
                let tuple: Vec<Point> = (0..n).map(|_| torus.sample_uniform(&mut rng)).collect();
                sup = sup.max(g.eval_points(&tuple).abs());
            }
            bound += vol.powi(n as i32) / fact * sup * 1.2;
        }
    }
    if let Some(t) = tol {
        if bound > t {
            return Err(Error::TruncationBound { bound, tol: t });
        }
    }
    Ok(LpEstimate { value, error: bound })
}

fn lp_monte_carlo(g: &OrderFunction, torus: Torus, samples: usize, seed: u64) -> Result<LpEstimate> {
    if samples == 0 {
        return Err(Error::InvalidParameter {
            name: "samples",
            message: "Monte Carlo mode needs at least one sample".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = torus.volume().exp();
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..samples {
        let eta = sample_poisson_config(&torus, 1.0, &mut rng)?;
        let v = g.eval(&eta);
        sum += v;
        sumsq += v * v;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sumsq / n - mean * mean).max(0.0);
    Ok(LpEstimate {
        value: scale * mean,
        error: scale * (var / n).sqrt(),
    })
}

/// Result of evaluating both sides of a Minlos identity independently.
#[derive(Clone, Copy, Debug)]
pub struct MinlosReport {
    pub lhs: f64,
    pub rhs: f64,
    pub lhs_se: f64,
    pub rhs_se: f64,
    pub discrepancy: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn report(lhs: LpEstimate, rhs: LpEstimate) -> MinlosReport {
    let discrepancy = (lhs.value - rhs.value).abs();
    let combined = (lhs.error * lhs.error + rhs.error * rhs.error).sqrt();
    // small floor covers quadrature round-off when both sides are exact
    let tolerance = 3.0 * combined + 1e-9 * lhs.value.abs().max(rhs.value.abs()).max(1.0);
    MinlosReport {
        lhs: lhs.value,
        rhs: rhs.value,
        lhs_se: lhs.error,
        rhs_se: rhs.error,
        discrepancy,
        tolerance,
        pass: discrepancy <= tolerance,
    }
}

fn mc_sides<L, R>(
    torus: &Torus,
    samples: usize,
    seed: u64,
    mut lhs_term: L,
    mut rhs_term: R,
    lhs_scale: f64,
) -> Result<MinlosReport>
where
    L: FnMut(&mut ChaCha8Rng) -> Result<f64>,
    R: FnMut(&mut ChaCha8Rng) -> Result<f64>,
{
    if samples == 0 {
        return Err(Error::InvalidParameter {
            name: "samples",
            message: "Minlos check needs at least one sample".into(),
        });
    }
    let n = samples as f64;
    let run = |stream: u64, scale: f64, f: &mut dyn FnMut(&mut ChaCha8Rng) -> Result<f64>| {
        let mut rng = ChaCha8Rng::seed_from_u64(crate::seed::derive(seed, &[stream]));
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..samples {
            let v = f(&mut rng)?;
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / n;
        let var = (sumsq / n - mean * mean).max(0.0);
        Ok::<LpEstimate, Error>(LpEstimate {
            value: scale * mean,
            error: scale * (var / n).sqrt(),
        })
    };
    // the two sides use independent sample streams
    let lhs = run(1, lhs_scale, &mut lhs_term)?;
    let rhs = run(2, torus.volume().exp(), &mut rhs_term)?;
    Ok(report(lhs, rhs))
}

/// The two-part Minlos identity:
/// `∫∫ G(η ∪ ξ) H(η, ξ) dλ dλ = ∫ G(η) Σ_{ξ⊆η} H(ξ, η∖ξ) dλ`.
pub fn minlos_two_part<H>(
    g: &OrderFunction,
    h: H,
    torus: &Torus,
    samples: usize,
    seed: u64,
) -> Result<MinlosReport>
where
    H: Fn(&Configuration, &Configuration) -> f64,
{
    let scale = (2.0 * torus.volume()).exp();
    mc_sides(
        torus,
        samples,
        seed,
        |rng| {
            let eta = sample_poisson_config(torus, 1.0, rng)?;
            let xi = sample_poisson_config(torus, 1.0, rng)?;
            let union = eta.with_points(xi.points());
            Ok(g.eval(&union) * h(&eta, &xi))
        },
        |rng| {
            let eta = sample_poisson_config(torus, 1.0, rng)?;
            let n = eta.len();
            if n > 22 {
                return Err(Error::CardinalityCap {
                    op: "minlos_two_part",
                    len: n,
                    cap: 22,
                });
            }
            let gv = g.eval(&eta);
            let mut inner = 0.0;
            for mask in 0..(1u32 << n) {
                let xi = eta.subset_by_mask(mask);
                let rest = eta.subset_by_mask(!mask & ((1u32 << n) - 1));
                inner += h(&xi, &rest);
            }
            Ok(gv * inner)
        },
        scale,
    )
}

/// The one-point Minlos identity:
/// `∫∫ G(η ∪ x) h(x, η) dx dλ = ∫ Σ_{x∈η} G(η) h(x, η∖x) dλ`.
/// The inner `dx` integral is a rectangle rule on `grid_m` points per
/// axis (exact for low-wavenumber trigonometric integrands).
pub fn minlos_one_point<H>(
    g: &OrderFunction,
    h: H,
    torus: &Torus,
    grid_m: usize,
    samples: usize,
    seed: u64,
) -> Result<MinlosReport>
where
    H: Fn(Point, &Configuration) -> f64,
{
    let grid = quad_points(torus, grid_m);
    let scale = torus.volume().exp();
    mc_sides(
        torus,
        samples,
        seed,
        |rng| {
            let eta = sample_poisson_config(torus, 1.0, rng)?;
            let mut pts = eta.points().to_vec();
            pts.push(Point::new_1d(0.0)); // slot for the integration variable
            let mut acc = 0.0;
            for &(x, w) in &grid {
                *pts.last_mut().expect("nonempty") = x;
                acc += w * g.eval_points(&pts) * h(x, &eta);
            }
            Ok(acc)
        },
        |rng| {
            let eta = sample_poisson_config(torus, 1.0, rng)?;
            let gv = g.eval(&eta);
            let mut acc = 0.0;
            for (i, &x) in eta.points().iter().enumerate() {
                acc += gv * h(x, &eta.without_index(i));
            }
            Ok(acc)
        },
        scale,
    )
}

/// The two-point Minlos identity:
/// `(1/2) ∫∫∫ G(η ∪ {x,y}) h(x, y, η) dx dy dλ
///    = ∫ Σ_{{x,y}⊆η} G(η) h(x, y, η∖{x,y}) dλ`.
///
/// `h` must be symmetric in its two point arguments. The union on the
/// left is evaluated as a point tuple (components extend smoothly to
/// coincident arguments), which keeps the rectangle rule exact across
/// the grid diagonal x = y.
pub fn minlos_two_point<H>(
    g: &OrderFunction,
    h: H,
    torus: &Torus,
    grid_m: usize,
    samples: usize,
    seed: u64,
) -> Result<MinlosReport>
where
    H: Fn(Point, Point, &Configuration) -> f64,
{
    let grid = quad_points(torus, grid_m);
    let scale = torus.volume().exp();
    mc_sides(
        torus,
        samples,
        seed,
        |rng| {
            let eta = sample_poisson_config(torus, 1.0, rng)?;
            let mut pts = eta.points().to_vec();
            let base = pts.len();
            pts.push(Point::new_1d(0.0));
            pts.push(Point::new_1d(0.0));
            let mut acc = 0.0;
            for &(x, wx) in &grid {
                pts[base] = x;
                for &(y, wy) in &grid {
                    pts[base + 1] = y;
                    acc += 0.5 * wx * wy * g.eval_points(&pts) * h(x, y, &eta);
                }
            }
            Ok(acc)
        },
        |rng| {
            let eta = sample_poisson_config(torus, 1.0, rng)?;
            let gv = g.eval(&eta);
            let pts = eta.points();
            let mut acc = 0.0;
            for i in 0..pts.len() {
                for j in (i + 1)..pts.len() {
                    acc += gv * h(pts[i], pts[j], &eta.without_pair(i, j));
                }
            }
            Ok(acc)
        },
        scale,
    )
}

fn quad_points(torus: &Torus, m: usize) -> Vec<(Point, f64)> {
    let h = torus.len / m as f64;
    let w = h.powi(torus.dim as i32);
    let total = m.pow(torus.dim as u32);
    (0..total)
        .map(|i| {
            let p = if torus.dim == 1 {
                Point::new_1d(i as f64 * h)
            } else {
                Point::new_2d((i / m) as f64 * h, (i % m) as f64 * h)
            };
            (p, w)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_torus() -> Torus {
        Torus::new(1, 4.0)
    }

    #[test]
    fn poisson_sampler_statistics() {
        let t = Torus::new(1, 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        assert!(sample_poisson_config(&t, 0.0, &mut rng).unwrap().is_empty());

        let draws = 100_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..draws {
            let n = sample_poisson_config(&t, 1.0, &mut rng).unwrap().len() as f64;
            sum += n;
            sumsq += n * n;
        }
        let mean = sum / draws as f64;
        let var = sumsq / draws as f64 - mean * mean;
        let se = (10.0 / draws as f64).sqrt();
        assert!((mean - 10.0).abs() <= 3.0 * se, "mean {mean}");
        // Poisson variance equals the mean; allow a loose band
        assert!((var - 10.0).abs() <= 0.3, "variance {var}");
    }

    #[test]
    fn series_and_mc_agree_on_empty_indicator() {
        let g = OrderFunction::indicator_empty();
        let t = small_torus();
        let series = lp_integrate(
            &g,
            &LpIntegrator {
                torus: t,
                mode: LpMode::Series {
                    order_cap: 4,
                    grid_m: 32,
                    tol: None,
                },
            },
        )
        .unwrap();
        assert_eq!(series.value, 1.0);
        assert_eq!(series.error, 0.0);
        let mc = lp_integrate(
            &g,
            &LpIntegrator {
                torus: t,
                mode: LpMode::MonteCarlo {
                    samples: 200_000,
                    seed: 5,
                },
            },
        )
        .unwrap();
        assert!((mc.value - 1.0).abs() <= 3.0 * mc.error + 1e-12);
    }

    /// The exponential formula: `∫ e(a, η) λ(dη) = exp(∫ a)`.
    #[test]
    fn exponential_formula() {
        let t = small_torus();
        let a = |p: &Point| 0.1 * (2.0 * std::f64::consts::PI * p.coord(0) / 4.0).cos() + 0.05;
        // ∫ a over the torus = 0.05 · |Λ| (the cosine integrates to zero)
        let expected = (0.05f64 * 4.0).exp();
        let g = OrderFunction::product_of(a, 24);
        let series = lp_integrate(
            &g,
            &LpIntegrator {
                torus: t,
                mode: LpMode::Series {
                    order_cap: 6,
                    grid_m: 8,
                    tol: None,
                },
            },
        )
        .unwrap();
        assert!(
            (series.value - expected).abs() <= series.error + 1e-6 * expected,
            "series {} vs {expected} (bound {})",
            series.value,
            series.error
        );
        let mc = lp_integrate(
            &g,
            &LpIntegrator {
                torus: t,
                mode: LpMode::MonteCarlo {
                    samples: 200_000,
                    seed: 11,
                },
            },
        )
        .unwrap();
        assert!(
            (mc.value - expected).abs() <= 3.0 * mc.error,
            "mc {} ± {} vs {expected}",
            mc.value,
            mc.error
        );
    }

    /// Indicator of `|η| = 2` integrates to `|Λ|²/2`.
    #[test]
    fn pair_indicator_closed_form() {
        let t = small_torus();
        let g = OrderFunction::order_indicator(2);
        let series = lp_integrate(
            &g,
            &LpIntegrator {
                torus: t,
                mode: LpMode::Series {
                    order_cap: 2,
                    grid_m: 16,
                    tol: None,
                },
            },
        )
        .unwrap();
        assert!((series.value - 8.0).abs() <= 1e-10);
        let mc = lp_integrate(
            &g,
            &LpIntegrator {
                torus: t,
                mode: LpMode::MonteCarlo {
                    samples: 100_000,
                    seed: 3,
                },
            },
        )
        .unwrap();
        assert!((mc.value - 8.0).abs() <= 3.0 * mc.error, "mc {}", mc.value);
    }

    #[test]
    fn truncation_bound_reported_and_enforced() {
        let t = small_torus();
        let g = OrderFunction::product_of(|_| 0.5, 8);
        let est = lp_integrate(
            &g,
            &LpIntegrator {
                torus: t,
                mode: LpMode::Series {
                    order_cap: 3,
                    grid_m: 8,
                    tol: None,
                },
            },
        )
        .unwrap();
        assert!(est.error > 0.0, "dropped orders must report a bound");
        let err = lp_integrate(
            &g,
            &LpIntegrator {
                torus: t,
                mode: LpMode::Series {
                    order_cap: 3,
                    grid_m: 8,
                    tol: Some(est.error / 10.0),
                },
            },
        );
        assert!(matches!(err, Err(Error::TruncationBound { .. })));
    }

    #[test]
    fn mc_zero_samples_rejected() {
        let g = OrderFunction::indicator_empty();
        let bad = lp_integrate(
            &g,
            &LpIntegrator {
                torus: small_torus(),
                mode: LpMode::MonteCarlo { samples: 0, seed: 0 },
            },
        );
        assert!(bad.is_err());
    }

    #[test]
    fn minlos_zero_h_both_sides_zero() {
        let t = small_torus();
        let g = OrderFunction::product_of(|_| 1.0, 30);
        let rep = minlos_one_point(&g, |_, _| 0.0, &t, 8, 2_000, 17).unwrap();
        assert_eq!(rep.lhs, 0.0);
        assert_eq!(rep.rhs, 0.0);
        assert!(rep.pass);
    }

    /// `G ≡ 1`, `h(x, η) = 1`: both sides equal `|Λ| e^{|Λ|}` (the mean
    /// number of points of the unit Poisson process times the measure
    /// of the restricted space).
    #[test]
    fn minlos_one_point_closed_form() {
        let t = small_torus();
        let g = OrderFunction::product_of(|_| 1.0, 30);
        let rep = minlos_one_point(&g, |_, _| 1.0, &t, 8, 150_000, 23).unwrap();
        let expected = 4.0 * 4.0f64.exp();
        assert!(rep.pass, "discrepancy {} tol {}", rep.discrepancy, rep.tolerance);
        assert!(
            (rep.lhs - expected).abs() <= 3.0 * rep.lhs_se + 1e-9,
            "lhs {} vs {expected}",
            rep.lhs
        );
        assert!(
            (rep.rhs - expected).abs() <= 3.0 * rep.rhs_se,
            "rhs {} vs {expected}",
            rep.rhs
        );
    }

    #[test]
    fn minlos_random_batteries_pass() {
        let t = small_torus();
        let tau = 2.0 * std::f64::consts::PI / t.len;
        for case in 0..4u64 {
            let g = OrderFunction::random(100 + case, 2, t.len);
            let f = move |p: Point| 0.5 + 0.3 * (tau * p.coord(0)).sin();

            let rep = minlos_two_part(
                &g,
                |xi, eta| {
                    if xi.len() <= 1 {
                        f(*xi.points().first().unwrap_or(&Point::new_1d(0.0)))
                            * (1.0 + eta.len() as f64).recip()
                    } else {
                        0.0
                    }
                },
                &t,
                60_000,
                1000 + case,
            )
            .unwrap();
            assert!(rep.pass, "two_part case {case}: {rep:?}");

            let rep = minlos_one_point(
                &g,
                |x, eta| if eta.len() <= 1 { f(x) } else { 0.0 },
                &t,
                12,
                60_000,
                2000 + case,
            )
            .unwrap();
            assert!(rep.pass, "one_point case {case}: {rep:?}");

            let rep = minlos_two_point(
                &g,
                |x, y, eta| f(x) * f(y) * (-(eta.len() as f64)).exp(),
                &t,
                12,
                30_000,
                3000 + case,
            )
            .unwrap();
            assert!(rep.pass, "two_point case {case}: {rep:?}");
        }
    }
}
