//! Readout error budget and the measurement time that minimizes it.
//!
//! ```text
//! P_m   = 1 - erf(sqrt(eta t_m) D / sqrt(2))
//! P_T1  = 1 - exp(-t_m / 2 T1)
//! P_th  = exp(-hbar w_q / kB T) / (1 + exp(-hbar w_q / kB T))
//! ```
//!
//! Setting `d(P_m + P_T1)/dt_m = 0` gives
//! `t_opt = T1 / (eta D^2 T1 - 1) * W(2 eta D^2 T1 (eta D^2 T1 - 1) / pi)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cavity::CavityParams;
use crate::error::{Error, Result};
use crate::readout::OutputPath;
use crate::special::{erfc, lambert_w0};

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J / K.
pub const K_B: f64 = 1.380_649e-23;

/// Below `eta D^2 T1 = 1 + NEAR_BOUNDARY` the closed form loses precision and
/// the optimum is located numerically.
pub const NEAR_BOUNDARY: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorModelParams {
    pub eta: f64,
    /// Mean photon number in the readout cavity.
    pub n_c: f64,
    pub t1: f64,
    pub omega_q: f64,
    pub t_e: f64,
    pub cavity: CavityParams,
    pub path: OutputPath,
    /// Add the thermal-population term to reported totals. The optimal time
    /// never depends on it.
    pub include_thermal: bool,
}

impl ErrorModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::param("eta", format!("must lie in (0, 1], got {}", self.eta)));
        }
        if !(self.n_c > 0.0) || !self.n_c.is_finite() {
            return Err(Error::param("n_c", format!("must be positive, got {}", self.n_c)));
        }
        if !(self.t1 > 0.0) || !self.t1.is_finite() {
            return Err(Error::param("t1", format!("must be positive, got {}", self.t1)));
        }
        if !(self.t_e > 0.0) || !self.t_e.is_finite() {
            return Err(Error::param("t_e", format!("must be positive, got {}", self.t_e)));
        }
        if !(self.omega_q >= 0.0) || !self.omega_q.is_finite() {
            return Err(Error::param("omega_q", format!("must be non-negative, got {}", self.omega_q)));
        }
        Ok(())
    }

    /// Pointer separation rate `D` on the configured path.
    pub fn pointer_rate(&self) -> Result<f64> {
        pointer_rate_from_photons(&self.cavity, self.n_c, &self.path)
    }

    pub fn with_t1(mut self, t1: f64) -> Self {
        self.t1 = t1;
        self
    }

    pub fn with_path(mut self, path: OutputPath) -> Self {
        self.path = path;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub p_m: f64,
    pub p_t1: f64,
    pub p_th: f64,
    pub total: f64,
    pub t_m: f64,
}

impl ErrorBudget {
    /// Assignment fidelity `1 - total / 2`, with `total` a sum of two
    /// conditional error probabilities.
    pub fn fidelity(&self) -> f64 {
        1.0 - 0.5 * self.total
    }
}

/// `D^T = sqrt(2 kappa_c n_c) / sqrt(1 + (kappa / 2 chi)^2)`, scaled by the
/// port factor for an interference output. Units of `s^-1/2`.
pub fn pointer_rate_from_photons(c: &CavityParams, n_c: f64, path: &OutputPath) -> Result<f64> {
    c.require_chi()?;
    if !(n_c >= 0.0) || !n_c.is_finite() {
        return Err(Error::param("n_c", format!("must be non-negative, got {n_c}")));
    }
    let ratio = c.kappa() / (2.0 * c.chi());
    let d_t = (2.0 * c.kappa_c() * n_c).sqrt() / (1.0 + ratio * ratio).sqrt();
    Ok(d_t * path.distance_factor())
}

pub fn p_measure(eta: f64, t_m: f64, d: f64) -> Result<f64> {
    if t_m < 0.0 {
        return Err(Error::NegativeTime(t_m));
    }
    if !(eta >= 0.0) || !d.is_finite() || !t_m.is_finite() {
        return Err(Error::param("eta", format!("invalid arguments eta={eta}, D={d}")));
    }
    Ok(erfc((eta * t_m).sqrt() * d.abs() * std::f64::consts::FRAC_1_SQRT_2))
}

pub fn p_relax(t_m: f64, t1: f64) -> Result<f64> {
    if t_m < 0.0 {
        return Err(Error::NegativeTime(t_m));
    }
    if !(t1 > 0.0) {
        return Err(Error::param("t1", format!("must be positive, got {t1}")));
    }
    Ok(-(-t_m / (2.0 * t1)).exp_m1())
}

/// Thermal excited-state population at device temperature `t_e`.
pub fn p_thermal(omega_q: f64, t_e: f64) -> Result<f64> {
    if !(t_e > 0.0) || !t_e.is_finite() {
        return Err(Error::param("t_e", format!("must be positive, got {t_e}")));
    }
    if !(omega_q >= 0.0) || !omega_q.is_finite() {
        return Err(Error::param("omega_q", format!("must be non-negative, got {omega_q}")));
    }
    let x = HBAR * omega_q / (K_B * t_e);
    // e^-x / (1 + e^-x)
    Ok(1.0 / (x.exp() + 1.0))
}

pub fn total_error(p: &ErrorModelParams, t_m: f64) -> Result<ErrorBudget> {
    p.validate()?;
    let d = p.pointer_rate()?;
    budget_at(p, d, t_m)
}

fn budget_at(p: &ErrorModelParams, d: f64, t_m: f64) -> Result<ErrorBudget> {
    let p_m = p_measure(p.eta, t_m, d)?;
    let p_t1 = p_relax(t_m, p.t1)?;
    let p_th = if p.include_thermal {
        p_thermal(p.omega_q, p.t_e)?
    } else {
        0.0
    };
    Ok(ErrorBudget {
        p_m,
        p_t1,
        p_th,
        total: p_m + p_t1 + p_th,
        t_m,
    })
}

/// Closed-form optimal measurement time for rate `d`.
pub fn optimal_time_closed_form(eta: f64, d: f64, t1: f64) -> Result<f64> {
    let x = eta * d * d * t1;
    if !(x > 1.0) {
        return Err(Error::NoInteriorOptimum(x));
    }
    let w = lambert_w0(2.0 * x * (x - 1.0) / PI)?;
    Ok(t1 / (x - 1.0) * w)
}

/// Measurement time minimizing `P_m + P_T1`, and the budget there.
pub fn optimal_time(p: &ErrorModelParams) -> Result<(f64, ErrorBudget)> {
    p.validate()?;
    let d = p.pointer_rate()?;
    let x = p.eta * d * d * p.t1;
    if !(x > 1.0) {
        return Err(Error::NoInteriorOptimum(x));
    }
    let t = if x <= 1.0 + NEAR_BOUNDARY {
        numeric_optimal_time(p.eta, d, p.t1)?
    } else {
        optimal_time_closed_form(p.eta, d, p.t1)?
    };
    Ok((t, budget_at(p, d, t)?))
}

/// Derivative-free minimization of `P_m + P_T1` over `t_m`: a log-spaced scan
/// followed by golden-section refinement.
pub fn numeric_optimal_time(eta: f64, d: f64, t1: f64) -> Result<f64> {
    let f = |t: f64| -> f64 {
        erfc((eta * t).sqrt() * d * std::f64::consts::FRAC_1_SQRT_2) - (-t / (2.0 * t1)).exp_m1()
    };
    let scale = t1.max(1.0 / (eta * d * d));
    let (lo, hi) = (scale * 1e-8, scale * 1e2);
    let n: usize = 2000;
    let ratio = (hi / lo).powf(1.0 / n as f64);
    let grid: Vec<f64> = (0..=n).map(|k| lo * ratio.powi(k as i32)).collect();
    let best = grid
        .iter()
        .enumerate()
        .min_by(|a, b| f(*a.1).total_cmp(&f(*b.1)))
        .map(|(k, _)| k)
        .ok_or(Error::NoInteriorOptimum(eta * d * d * t1))?;
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(n)];
    Ok(golden_section(f, a, b, 1e-12))
}

/// Minimizes a unimodal `f` on `[a, b]` to relative bracket width `rtol`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, rtol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..500 {
        if (b - a).abs() <= rtol * (a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
