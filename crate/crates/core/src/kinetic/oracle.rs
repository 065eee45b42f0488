//! Independent scalar oracles for spatially homogeneous data.
//!
//! A constant density keeps the jump terms in exact balance, so the
//! density equation collapses to the scalar ODE
//! `dρ/dt = −½ <c1> ρ² e^{−ρ <φ1>}`, with the logistic-type closed form
//! `ρ(t) = ρ0 / (1 + ½ <c1> ρ0 t)` when the potential vanishes. These
//! evaluations never touch the grid solver and serve as its oracle.

use crate::error::{Error, Result};
use crate::kernels::KernelSet;

/// Homogeneous solution at time `t` from constant initial density `c`.
pub fn homogeneous_oracle(c: f64, t: f64, ks: &KernelSet) -> Result<f64> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::InvalidParameter {
            name: "c",
            message: format!("initial density must be nonnegative, got {c}"),
        });
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter {
            name: "t",
            message: format!("time must be nonnegative, got {t}"),
        });
    }
    let c1 = ks.c1_int();
    let p1 = ks.phi1_int();
    if p1 == 0.0 {
        return Ok(c / (1.0 + 0.5 * c1 * c * t));
    }
    integrate_scalar_ode(
        |_, rho| -0.5 * c1 * rho * rho * (-rho * p1).exp(),
        0.0,
        c,
        t,
        1e-10,
        1e-14,
    )
}

/// Adaptive Dormand–Prince 5(4) integration of a scalar ODE
/// `y' = f(t, y)` from `(t0, y0)` to `t1`.
pub fn integrate_scalar_ode<F: Fn(f64, f64) -> f64>(
    f: F,
    t0: f64,
    y0: f64,
    t1: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<f64> {
    if t1 == t0 {
        return Ok(y0);
    }
    let span = t1 - t0;
    let mut t = t0;
    let mut y = y0;
    let mut dt = 0.01 * span;
    let mut k1 = f(t, y);

    // Dormand–Prince tableau
    const A21: f64 = 1.0 / 5.0;
    const A31: f64 = 3.0 / 40.0;
    const A32: f64 = 9.0 / 40.0;
    const A41: f64 = 44.0 / 45.0;
    const A42: f64 = -56.0 / 15.0;
    const A43: f64 = 32.0 / 9.0;
    const A51: f64 = 19372.0 / 6561.0;
    const A52: f64 = -25360.0 / 2187.0;
    const A53: f64 = 64448.0 / 6561.0;
    const A54: f64 = -212.0 / 729.0;
    const A61: f64 = 9017.0 / 3168.0;
    const A62: f64 = -355.0 / 33.0;
    const A63: f64 = 46732.0 / 5247.0;
    const A64: f64 = 49.0 / 176.0;
    const A65: f64 = -5103.0 / 18656.0;
    const B1: f64 = 35.0 / 384.0;
    const B3: f64 = 500.0 / 1113.0;
    const B4: f64 = 125.0 / 192.0;
    const B5: f64 = -2187.0 / 6784.0;
    const B6: f64 = 11.0 / 84.0;
    // difference to the embedded 4th-order weights
    const D1: f64 = 71.0 / 57600.0;
    const D3: f64 = -71.0 / 16695.0;
    const D4: f64 = 71.0 / 1920.0;
    const D5: f64 = -17253.0 / 339200.0;
    const D6: f64 = 22.0 / 525.0;
    const D7: f64 = -1.0 / 40.0;

    let mut steps = 0usize;
    loop {
        if (t - t1).abs() <= 1e-15 * t1.abs().max(1.0) {
            return Ok(y);
        }
        if steps > 1_000_000 {
            return Err(Error::NoConvergence {
                iterations: steps,
                residual: (t1 - t).abs(),
            });
        }
        if (t + dt - t1) * span.signum() > 0.0 {
            dt = t1 - t;
        }
        let k2 = f(t + A21 * dt, y + dt * A21 * k1);
        let k3 = f(t + 0.3 * dt, y + dt * (A31 * k1 + A32 * k2));
        let k4 = f(t + 0.8 * dt, y + dt * (A41 * k1 + A42 * k2 + A43 * k3));
        let k5 = f(
            t + 8.0 / 9.0 * dt,
            y + dt * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4),
        );
        let k6 = f(
            t + dt,
            y + dt * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5),
        );
        let y_new = y + dt * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
        let k7 = f(t + dt, y_new);
        let err = dt * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7);
        let tol = abs_tol + rel_tol * y.abs().max(y_new.abs());
        let ratio = (err.abs() / tol).max(1e-30);
        if ratio <= 1.0 {
            t += dt;
            y = y_new;
            k1 = k7; // first-same-as-last
            steps += 1;
        }
        let factor = (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0);
        dt *= factor;
        if dt.abs() < 1e-16 * span.abs() {
            return Err(Error::Unstable {
                t,
                message: "step size underflow in the scalar integrator".into(),
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{KernelParams, KernelSet};

    fn ks(q1: f64, a1: f64, w1: f64) -> KernelSet {
        KernelSet::new(KernelParams {
            q1,
            a1,
            w1,
            ..KernelParams::default()
        })
        .unwrap()
    }

    #[test]
    fn time_zero_returns_initial() {
        let k = ks(2.0, 0.0, 1.0);
        assert_eq!(homogeneous_oracle(1.7, 0.0, &k).unwrap(), 1.7);
    }

    #[test]
    fn closed_form_value() {
        // <c1> = 2, c = 1, t = 1: 1/(1 + 1) = 0.5
        let k = ks(2.0, 0.0, 1.0);
        assert_eq!(homogeneous_oracle(1.0, 1.0, &k).unwrap(), 0.5);
    }

    #[test]
    fn decay_is_monotone() {
        let k = ks(1.5, 0.4, 0.8);
        let mut prev = homogeneous_oracle(2.0, 0.0, &k).unwrap();
        for i in 1..=20 {
            let v = homogeneous_oracle(2.0, i as f64 * 0.5, &k).unwrap();
            assert!(v < prev && v > 0.0, "t = {}: {v}", i as f64 * 0.5);
            prev = v;
        }
    }

    #[test]
    fn integrator_matches_exponential() {
        let y = integrate_scalar_ode(|_, y| -y, 0.0, 1.0, 2.0, 1e-10, 1e-14).unwrap();
        let exact = (-2.0f64).exp();
        assert!((y - exact).abs() <= 1e-9 * exact, "{y} vs {exact}");
    }

    #[test]
    fn integrator_matches_logistic_closed_form() {
        // same ODE as the oracle with phi = 0, integrated numerically
        let c1 = 2.0;
        let y = integrate_scalar_ode(
            |_, rho| -0.5 * c1 * rho * rho,
            0.0,
            1.0,
            1.0,
            1e-11,
            1e-15,
        )
        .unwrap();
        assert!((y - 0.5).abs() <= 1e-9, "{y}");
    }

    #[test]
    fn screened_decay_is_slower() {
        let plain = ks(2.0, 0.0, 1.0);
        let screened = ks(2.0, 1.0, 0.5);
        let a = homogeneous_oracle(1.0, 1.0, &plain).unwrap();
        let b = homogeneous_oracle(1.0, 1.0, &screened).unwrap();
        assert!(b > a, "screening suppresses coalescence: {b} vs {a}");
    }

    #[test]
    fn rejects_bad_inputs() {
        let k = ks(1.0, 0.0, 1.0);
        assert!(homogeneous_oracle(-1.0, 1.0, &k).is_err());
        assert!(homogeneous_oracle(1.0, -1.0, &k).is_err());
    }
}
