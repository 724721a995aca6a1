//! Special functions needed by the error budget.

use std::f64::consts::E;

use crate::error::{Error, Result};

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// `1 - erf(x)` without cancellation in the upper tail.
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Standard normal upper tail `P(Z > z)`.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z * std::f64::consts::FRAC_1_SQRT_2)
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * std::f64::consts::FRAC_1_SQRT_2)
}

const MAX_HALLEY_STEPS: usize = 64;

/// Principal branch `W0` of the Lambert W function, the solution of
/// `w * exp(w) = x` with `w >= -1`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    let branch = -1.0 / E;
    if x.is_nan() {
        return Err(Error::LambertDomain(x));
    }
    if x <= branch {
        // tolerate the rounding of -1/e itself
        return if branch - x <= 4.0 * f64::EPSILON * -branch {
            Ok(-1.0)
        } else {
            Err(Error::LambertDomain(x))
        };
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(f64::INFINITY);
    }

    let mut w = initial_guess(x);
    for _ in 0..MAX_HALLEY_STEPS {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        if denom == 0.0 || !denom.is_finite() {
            break;
        }
        let step = f / denom;
        let next = (w - step).max(-1.0);
        if (next - w).abs() <= 4.0 * f64::EPSILON * (1.0 + next.abs()) {
            w = next;
            break;
        }
        w = next;
    }
    Ok(w)
}

fn initial_guess(x: f64) -> f64 {
    if x < -0.32 {
        // series about the branch point
        let p = (2.0 * (E * x + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x < E {
        // crude but within the Halley basin on [-0.32, e)
        let l = x.ln_1p();
        l * (1.0 - l / (2.0 + l))
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    }
}
