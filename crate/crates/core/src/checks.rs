//! Identity batteries: randomized, fixed-seed checks of the harmonic
//! identities, the Minlos identities, the generator conjugation, and
//! the kernel integral constants. The command-line front end prints
//! these as CSV; the acceptance suite gates on them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::geometry::{Point, Torus};
use crate::harmonic::{
    exp_vector, generator_l_apply, k_inverse, k_transform, lhat_apply, minlos_one_point,
    minlos_two_part, minlos_two_point, star_convolution, Configuration, OrderFunction, QuadGrid,
};
use crate::kernels::{KernelParams, KernelSet};
use crate::seed;

/// One verified identity instance.
#[derive(Clone, Debug)]
pub struct CheckRow {
    pub family: String,
    pub case: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub discrepancy: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRow {
    fn of(family: &str, case: usize, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let discrepancy = (lhs - rhs).abs();
        CheckRow {
            family: family.to_string(),
            case,
            lhs,
            rhs,
            discrepancy,
            tolerance,
            pass: discrepancy <= tolerance,
        }
    }
}

fn random_config<R: Rng + ?Sized>(torus: &Torus, max_pts: usize, rng: &mut R) -> Configuration {
    let n = rng.random_range(0..=max_pts);
    Configuration::from_points((0..n).map(|_| torus.sample_uniform(rng)).collect())
}

fn rel_tol(lhs: f64, rhs: f64, rel: f64) -> f64 {
    rel * lhs.abs().max(rhs.abs()).max(1.0)
}

/// `K(e(f,·))(γ) = Π_{x∈γ} (1 + f(x))` on random data.
pub fn kprod_battery(cases: usize, base_seed: u64, torus_len: f64) -> Vec<CheckRow> {
    let torus = Torus::new(1, torus_len);
    let mut rows = Vec::with_capacity(cases);
    for case in 0..cases {
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(base_seed, &[1, case as u64]));
        let amp: f64 = rng.random_range(-0.95..0.95);
        let k = rng.random_range(1..4) as f64;
        let tau = 2.0 * std::f64::consts::PI / torus_len;
        let f = move |p: &Point| amp * (tau * k * p.coord(0)).sin();
        let gamma = random_config(&torus, 5, &mut rng);
        let lhs = k_transform(|eta| exp_vector(f, eta), &gamma).expect("within cap");
        let rhs = exp_vector(|p| 1.0 + f(p), &gamma);
        rows.push(CheckRow::of("kprod", case, lhs, rhs, rel_tol(lhs, rhs, 1e-10)));
    }
    rows
}

/// `K(G1 ⋆ G2) = (K G1)(K G2)` on random bounded-order functions.
pub fn kstar_battery(cases: usize, base_seed: u64, torus_len: f64) -> Vec<CheckRow> {
    let torus = Torus::new(1, torus_len);
    let mut rows = Vec::with_capacity(cases);
    for case in 0..cases {
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(base_seed, &[2, case as u64]));
        let g1 = OrderFunction::random(seed::derive(base_seed, &[21, case as u64]), 2, torus_len);
        let g2 = OrderFunction::random(seed::derive(base_seed, &[22, case as u64]), 2, torus_len);
        let gamma = random_config(&torus, 5, &mut rng);
        let conv =
            |eta: &Configuration| star_convolution(|a| g1.eval(a), |b| g2.eval(b), eta).unwrap();
        let lhs = k_transform(conv, &gamma).expect("within cap");
        let rhs = k_transform(|e| g1.eval(e), &gamma).unwrap()
            * k_transform(|e| g2.eval(e), &gamma).unwrap();
        rows.push(CheckRow::of("kstar", case, lhs, rhs, rel_tol(lhs, rhs, 1e-10)));
    }
    rows
}

/// `K⁻¹(K G) = G` on random data.
pub fn round_trip_battery(cases: usize, base_seed: u64, torus_len: f64) -> Vec<CheckRow> {
    let torus = Torus::new(1, torus_len);
    let mut rows = Vec::with_capacity(cases);
    for case in 0..cases {
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(base_seed, &[3, case as u64]));
        let g = OrderFunction::random(seed::derive(base_seed, &[31, case as u64]), 3, torus_len);
        let eta = random_config(&torus, 5, &mut rng);
        let f = |xi: &Configuration| k_transform(|e| g.eval(e), xi).unwrap();
        let lhs = k_inverse(f, &eta).expect("within cap");
        let rhs = g.eval(&eta);
        rows.push(CheckRow::of(
            "k_round_trip",
            case,
            lhs,
            rhs,
            rel_tol(lhs, rhs, 1e-10),
        ));
    }
    rows
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MinlosVariant {
    TwoPart,
    OnePoint,
    TwoPoint,
}

impl MinlosVariant {
    pub fn name(&self) -> &'static str {
        match self {
            MinlosVariant::TwoPart => "minlos_two_part",
            MinlosVariant::OnePoint => "minlos_one_point",
            MinlosVariant::TwoPoint => "minlos_two_point",
        }
    }
}

/// Fixed-seed Minlos battery on the volume-4 torus: random bounded `G`
/// against product-form `h`, both sides Monte Carlo with independent
/// streams, gate at 3 combined standard errors.
pub fn minlos_battery(
    variant: MinlosVariant,
    cases: usize,
    samples: usize,
    base_seed: u64,
) -> Result<Vec<CheckRow>> {
    let torus = Torus::new(1, 4.0);
    let tau = 2.0 * std::f64::consts::PI / torus.len;
    let xgrid = 16;
    let mut rows = Vec::with_capacity(cases);
    for case in 0..cases {
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(base_seed, &[4, case as u64]));
        let g = OrderFunction::random(seed::derive(base_seed, &[41, case as u64]), 2, torus.len);
        let fa: f64 = rng.random_range(0.2..0.8);
        let fb: f64 = rng.random_range(-0.4..0.4);
        let fk = rng.random_range(1..4) as f64;
        let va: f64 = rng.random_range(-0.45..0.45);
        let vb: f64 = rng.random_range(-0.45..0.45);
        let f = move |p: Point| fa + fb * (tau * fk * p.coord(0)).sin();
        let v = move |p: &Point| va + vb * (tau * p.coord(0)).cos();
        let mc_seed = seed::derive(base_seed, &[42, case as u64]);

        let report = match variant {
            MinlosVariant::TwoPart => minlos_two_part(
                &g,
                |xi, zeta| exp_vector(v, xi) * exp_vector(v, zeta),
                &torus,
                samples,
                mc_seed,
            )?,
            MinlosVariant::OnePoint => minlos_one_point(
                &g,
                |x, eta| f(x) * exp_vector(v, eta),
                &torus,
                xgrid,
                samples,
                mc_seed,
            )?,
            MinlosVariant::TwoPoint => minlos_two_point(
                &g,
                |x, y, eta| f(x) * f(y) * exp_vector(v, eta),
                &torus,
                xgrid,
                samples,
                mc_seed,
            )?,
        };
        rows.push(CheckRow {
            family: variant.name().to_string(),
            case,
            lhs: report.lhs,
            rhs: report.rhs,
            discrepancy: report.discrepancy,
            tolerance: report.tolerance,
            pass: report.pass,
        });
    }
    Ok(rows)
}

/// The three sub-models of the conjugation check.
fn conjugation_models() -> Vec<(&'static str, KernelParams)> {
    let base = KernelParams {
        q1: 1.0,
        sigma1: 0.5,
        q2: 0.8,
        sigma2: 0.6,
        a1: 0.6,
        w1: 0.6,
        a2: 0.4,
        w2: 0.7,
        ..KernelParams::default()
    };
    vec![
        ("coalescence_only", KernelParams { q2: 0.0, ..base }),
        ("jump_only", KernelParams { q1: 0.0, ..base }),
        ("mixed", base),
    ]
}

/// `K(L̂ G)(γ) = (L K G)(γ)` on matched quadrature grids for the
/// coalescence-only, jump-only and mixed kernels, configurations up to
/// three points.
pub fn conjugation_battery(base_seed: u64) -> Result<Vec<CheckRow>> {
    let quad = QuadGrid::new(384);
    let mut rows = Vec::new();
    let mut case = 0;
    for (name, params) in conjugation_models() {
        let ks = KernelSet::new(params)?;
        let torus = ks.torus();
        let g = OrderFunction::random(seed::derive(base_seed, &[51, case as u64]), 2, torus.len);
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(base_seed, &[52, case as u64]));
        for size in 0..=3usize {
            let gamma = Configuration::from_points(
                (0..size).map(|_| torus.sample_uniform(&mut rng)).collect(),
            );
            let lhs = k_transform(|eta| lhat_apply(&g, eta, &ks, quad).unwrap(), &gamma)?;
            let rhs = generator_l_apply(&g, &gamma, &ks, quad)?;
            let tol = 1e-6 * lhs.abs().max(rhs.abs()).max(1e-12);
            let mut row = CheckRow::of("conjugation", case, lhs, rhs, tol);
            row.family = format!("conjugation_{name}");
            rows.push(row);
            case += 1;
        }
    }
    Ok(rows)
}

/// Quadrature checks of the kernel integral constants plus the
/// symmetry and screening-bound properties.
pub fn kernel_battery(ks: &KernelSet, base_seed: u64) -> Vec<CheckRow> {
    let torus = ks.torus();
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(base_seed, &[6]));
    let mut rows = Vec::new();
    let mut case = 0;
    let mut push = |family: &str, lhs: f64, rhs: f64, tol: f64| {
        rows.push(CheckRow::of(family, case, lhs, rhs, tol));
        case += 1;
    };

    // symmetry of c1 under swapping the merging pair (exact)
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let x = torus.sample_uniform(&mut rng);
        let y = torus.sample_uniform(&mut rng);
        let z = torus.sample_uniform(&mut rng);
        worst = worst.max((ks.c1_eval(x, y, z) - ks.c1_eval(y, x, z)).abs());
    }
    push("c1_symmetry", worst, 0.0, 0.0);

    // screening products stay in (0, 1]
    let mut min_prod = f64::INFINITY;
    let mut max_prod = f64::NEG_INFINITY;
    for _ in 0..200 {
        let z = torus.sample_uniform(&mut rng);
        let n = rng.random_range(0..8);
        let mut prod = 1.0;
        for _ in 0..n {
            prod *= ks.screen1(z, torus.sample_uniform(&mut rng));
        }
        min_prod = min_prod.min(prod);
        max_prod = max_prod.max(prod);
    }
    push(
        "screening_positive",
        if min_prod > 0.0 { 1.0 } else { 0.0 },
        1.0,
        0.0,
    );
    push("screening_at_most_one", max_prod.max(1.0), 1.0, 0.0);

    if torus.dim == 1 {
        let m = 2048;
        let h = torus.len / m as f64;
        let x = torus.sample_uniform(&mut rng);
        let grid = |i: usize| Point::new_1d(i as f64 * h);

        let c2_over_y: f64 = (0..m).map(|i| ks.c2_eval(x, grid(i)) * h).sum();
        push("c2_int_dest", c2_over_y, ks.c2_int(), 1e-10 * ks.c2_int().max(1.0));
        let c2_over_x: f64 = (0..m).map(|i| ks.c2_eval(grid(i), x) * h).sum();
        push("c2_int_src", c2_over_x, ks.c2_int(), 1e-10 * ks.c2_int().max(1.0));

        let phi1: f64 = (0..m).map(|i| ks.phi1_eval(grid(i)) * h).sum();
        push("phi1_int", phi1, ks.phi1_int(), 1e-10 * ks.phi1_int().max(1e-12));
        let phi2: f64 = (0..m).map(|i| ks.phi2_eval(grid(i)) * h).sum();
        push("phi2_int", phi2, ks.phi2_int(), 1e-10 * ks.phi2_int().max(1e-12));

        // the three double integrals of c1 against <c1>
        let md = 512;
        let hd = torus.len / md as f64;
        let gd = |i: usize| Point::new_1d(i as f64 * hd);
        let z = torus.sample_uniform(&mut rng);
        let y = torus.sample_uniform(&mut rng);
        let xf = torus.sample_uniform(&mut rng);
        let (mut over_xy, mut over_xz, mut over_yz) = (0.0, 0.0, 0.0);
        for i in 0..md {
            for j in 0..md {
                over_xy += ks.c1_eval(gd(i), gd(j), z) * hd * hd;
                over_xz += ks.c1_eval(gd(i), y, gd(j)) * hd * hd;
                over_yz += ks.c1_eval(xf, gd(i), gd(j)) * hd * hd;
            }
        }
        let tol = 1e-8 * ks.c1_int().max(1.0);
        push("c1_int_over_xy", over_xy, ks.c1_int(), tol);
        push("c1_int_over_xz", over_xz, ks.c1_int(), tol);
        push("c1_int_over_yz", over_yz, ks.c1_int(), tol);

        // closed-form pair density against the z-quadrature
        let a = torus.sample_uniform(&mut rng);
        let b = torus.sample_uniform(&mut rng);
        let pair_quad: f64 = (0..m).map(|i| ks.c1_eval(a, b, grid(i)) * h).sum();
        let pair_closed = ks.c1_pair_density(a, b);
        push(
            "c1_pair_density",
            pair_quad,
            pair_closed,
            1e-10 * pair_closed.max(1e-12),
        );
    }
    rows
}

/// Default full battery used by the command line: every family at
/// acceptance-scale counts. Minlos batteries use the given sample
/// count per side (the acceptance gate runs 100 000).
pub fn run_full_battery(base_seed: u64, minlos_samples: usize) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    rows.extend(kprod_battery(100, base_seed, 20.0));
    rows.extend(kstar_battery(100, base_seed, 20.0));
    rows.extend(round_trip_battery(100, base_seed, 20.0));
    for variant in [
        MinlosVariant::TwoPart,
        MinlosVariant::OnePoint,
        MinlosVariant::TwoPoint,
    ] {
        rows.extend(minlos_battery(variant, 20, minlos_samples, base_seed)?);
    }
    rows.extend(conjugation_battery(base_seed)?);
    Ok(rows)
}
