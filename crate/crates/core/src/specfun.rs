//! Special functions: Gaussian tail `Q`, its inverse, and the principal branch
//! of the Lambert W function.
//!
//! Everything here is self-contained; no external math library is used.

use std::f64::consts::{E, FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `1 / sqrt(pi)`
const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// Below this argument the complementary error function is taken from the
/// positive-term erf series; above it from the continued fraction.
const ERFC_SWITCH: f64 = 2.0;

/// Complementary error function for `z >= 0`.
fn erfc_nonneg(z: f64) -> f64 {
    debug_assert!(z >= 0.0);
    if z < ERFC_SWITCH {
        // erf(z) = 2/sqrt(pi) exp(-z^2) sum_n (2 z^2)^n z / (1*3*...*(2n+1));
        // every term is positive so there is no cancellation.
        let two_z2 = 2.0 * z * z;
        let mut term = z;
        let mut sum = z;
        let mut n = 0.0;
        loop {
            n += 1.0;
            term *= two_z2 / (2.0 * n + 1.0);
            sum += term;
            if term <= sum * 1e-17 {
                break;
            }
        }
        1.0 - 2.0 * FRAC_1_SQRT_PI * (-z * z).exp() * sum
    } else {
        // erfc(z) = exp(-z^2)/sqrt(pi) / (z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))
        // evaluated with the modified Lentz algorithm.
        const TINY: f64 = 1e-300;
        let mut f = z;
        let mut c = f;
        let mut d = 0.0;
        for n in 1..1000 {
            let a = 0.5 * n as f64;
            d = z + a * d;
            if d.abs() < TINY {
                d = TINY;
            }
            d = 1.0 / d;
            c = z + a / c;
            if c.abs() < TINY {
                c = TINY;
            }
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        FRAC_1_SQRT_PI * (-z * z).exp() / f
    }
}

/// Upper tail of the standard normal distribution,
/// `Q(x) = 1/sqrt(2 pi) * int_x^inf exp(-u^2/2) du`.
pub fn q_func(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x >= 0.0 {
        0.5 * erfc_nonneg(x * FRAC_1_SQRT_2)
    } else {
        1.0 - 0.5 * erfc_nonneg(-x * FRAC_1_SQRT_2)
    }
}

/// Standard normal density.
fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Inverse of [`q_func`]: returns `x` with `Q(x) = p`.
///
/// Starts from the Abramowitz–Stegun rational guess and polishes with Halley
/// steps on `Q(x) - p`.
pub fn inv_q(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("inverse Q needs 0 < p < 1, got {p}")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    if p > 0.5 {
        return inv_q(1.0 - p).map(|x| -x);
    }

    let t = (-2.0 * p.ln()).sqrt();
    let mut x = t
        - (2.515_517 + 0.802_853 * t + 0.010_328 * t * t)
            / (1.0 + 1.432_788 * t + 0.189_269 * t * t + 0.001_308 * t * t * t);

    for _ in 0..50 {
        let pdf = normal_pdf(x);
        if pdf == 0.0 {
            break;
        }
        // Newton step for f(x) = Q(x) - p, f'(x) = -pdf(x), f''(x) = x pdf(x).
        let u = (q_func(x) - p) / -pdf;
        let step = u / (1.0 + 0.5 * u * x);
        x -= step;
        if step.abs() <= 1e-15 * (1.0 + x.abs()) {
            break;
        }
    }
    Ok(x)
}

/// Principal branch `W0` of the Lambert W function, the solution `y >= -1`
/// of `y e^y = x`.
pub fn lambert_w(x: f64) -> Result<f64> {
    let branch_point = -1.0 / E;
    if x.is_nan() || x < branch_point - 1e-15 {
        return Err(Error::Domain(format!(
            "Lambert W0 needs x >= -1/e, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x <= branch_point {
        return Ok(-1.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }

    let mut w = if x < -0.25 {
        // Series about the branch point in p = sqrt(2 (e x + 1)).
        let p = (2.0 * (E * x + 1.0)).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x < E {
        let l = x.ln_1p();
        l * (1.0 - (1.0 + l).ln() / (2.0 + l))
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };

    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        w -= step;
        if step.abs() <= 1e-15 * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(w.max(-1.0))
}
