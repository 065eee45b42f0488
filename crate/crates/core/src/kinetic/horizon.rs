//! The guaranteed contraction horizon.
//!
//! Given a ball radius `r`, the existence argument picks a weight
//! `γ > 1 + 3<c1>r / (2<c2>)` so the ball-invariance envelope
//!
//! ```text
//! f1(t) = e^{−(γ+1)<c2>t} [ 1 + 3<c1>r/(2(2γ+1)<c2>) (e^{(2γ+1)<c2>t} − 1)
//!                             + 2/(γ+1) (e^{(γ+1)<c2>t} − 1) ]
//! ```
//!
//! starts at 1 with negative slope; the map keeps the ball up to the
//! first return time `T̃` of `f1` to 1. The contraction envelope
//!
//! ```text
//! f2(t) = t [ (3/2) r² <c1> e^{2γ<c2>t} (<c1>t + <φ1>)
//!           + r e^{γ<c2>t} (2<c1><c2>t + 3<c1> + 2<c2><φ2>)
//!           + 2<c2> ]
//! ```
//!
//! increases from 0, so `T**` solves `f2 = ϑ` for a safety level
//! `ϑ < 1`, and the horizon is `T* = min(T̃, T**)` with contraction
//! constant `C = f2(T*)`.

use crate::error::{Error, Result};
use crate::kernels::KernelSet;

/// The tuple of constants guaranteeing that the integral-equation map
/// is a strict contraction on `B_{T*,γ}(r)`.
#[derive(Clone, Copy, Debug)]
pub struct PicardHorizon {
    pub r: f64,
    pub gamma: f64,
    pub t_tilde: f64,
    pub t_double_star: f64,
    pub t_star: f64,
    pub c: f64,
}

/// Ball-invariance envelope `f1` (equals 1 at t = 0).
pub fn lemma1_f(t: f64, c1: f64, c2: f64, r: f64, gamma: f64) -> f64 {
    let a = 3.0 * c1 * r / (2.0 * (2.0 * gamma + 1.0) * c2);
    let b = 2.0 / (gamma + 1.0);
    (-(gamma + 1.0) * c2 * t).exp()
        * (1.0 + a * (((2.0 * gamma + 1.0) * c2 * t).exp() - 1.0)
            + b * (((gamma + 1.0) * c2 * t).exp() - 1.0))
}

/// Initial slope of `f1`; negative whenever `γ > 1 + 3 c1 r / (2 c2)`.
pub fn lemma1_fprime0(c1: f64, c2: f64, r: f64, gamma: f64) -> f64 {
    -(gamma + 1.0) * c2 + 1.5 * c1 * r + 2.0 * c2
}

/// Contraction envelope `f2` (zero at t = 0, increasing).
pub fn lemma2_f(t: f64, c1: f64, c2: f64, r: f64, gamma: f64, phi1: f64, phi2: f64) -> f64 {
    t * (1.5 * r * r * c1 * (2.0 * gamma * c2 * t).exp() * (c1 * t + phi1)
        + r * (gamma * c2 * t).exp() * (2.0 * c1 * c2 * t + 3.0 * c1 + 2.0 * c2 * phi2)
        + 2.0 * c2)
}

/// Compute the horizon for ball radius `r`, taking
/// `γ = (1 + gamma_margin)(1 + 3<c1>r/(2<c2>))` and the contraction
/// safety level `ϑ = theta`. Roots are found by bracket expansion and
/// bisection to relative tolerance 1e−10.
pub fn horizon(r: f64, ks: &KernelSet, gamma_margin: f64, theta: f64) -> Result<PicardHorizon> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidParameter {
            name: "r",
            message: format!("ball radius must be positive, got {r}"),
        });
    }
    if !(gamma_margin > 0.0) {
        return Err(Error::InvalidParameter {
            name: "gamma_margin",
            message: "the weight inequality is strict; the margin must be positive".into(),
        });
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter {
            name: "theta",
            message: format!("safety level must lie in (0, 1), got {theta}"),
        });
    }
    let c1 = ks.c1_int();
    let c2 = ks.c2_int();
    if c2 == 0.0 {
        return Err(Error::ZeroJumpIntensity);
    }
    let (p1, p2) = (ks.phi1_int(), ks.phi2_int());
    let gamma = (1.0 + gamma_margin) * (1.0 + 3.0 * c1 * r / (2.0 * c2));
    debug_assert!(lemma1_fprime0(c1, c2, r, gamma) < 0.0);

    // T~: first strictly positive return of f1 to 1
    let g1 = |t: f64| lemma1_f(t, c1, c2, r, gamma) - 1.0;
    let scale = 1.0 / c2;
    let mut lo = 1e-8 * scale;
    // the slope at zero is negative, but step inward if round-off hides it
    while g1(lo) >= 0.0 {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(Error::BracketFailure {
                what: "the return time of the ball envelope",
                upper: lo,
            });
        }
    }
    let mut hi = lo;
    while g1(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if (2.0 * gamma + 1.0) * c2 * hi > 700.0 {
            return Err(Error::BracketFailure {
                what: "the return time of the ball envelope",
                upper: hi,
            });
        }
    }
    let t_tilde = bisect(&g1, lo, hi, 1e-10);

    // T**: f2 crosses theta
    let g2 = |t: f64| lemma2_f(t, c1, c2, r, gamma, p1, p2) - theta;
    let mut lo2 = 1e-12 * scale;
    let mut hi2 = lo2;
    while g2(hi2) < 0.0 {
        lo2 = hi2;
        hi2 *= 2.0;
        if 2.0 * gamma * c2 * hi2 > 700.0 {
            return Err(Error::BracketFailure {
                what: "the contraction level crossing",
                upper: hi2,
            });
        }
    }
    let t_double_star = bisect(&g2, lo2, hi2, 1e-10);

    let t_star = t_tilde.min(t_double_star);
    let c = lemma2_f(t_star, c1, c2, r, gamma, p1, p2);
    Ok(PicardHorizon {
        r,
        gamma,
        t_tilde,
        t_double_star,
        t_star,
        c,
    })
}

/// Bisection on a bracketing interval `[lo, hi]` with `g(lo) < 0 <= g(hi)`.
fn bisect(g: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, rel_tol: f64) -> f64 {
    debug_assert!(g(lo) < 0.0 && g(hi) >= 0.0);
    while (hi - lo) > rel_tol * hi.abs().max(f64::MIN_POSITIVE) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
