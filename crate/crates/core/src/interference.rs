//! Beamsplitter combination of the transmitted and reflected outputs.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cavity::{ensure_finite_amplitude, Amplitude, PointerPair};
use crate::error::{Error, Result};

/// Wraps a phase into `(-pi, pi]`.
pub fn normalize_phase(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(TAU);
    if t > PI {
        t -= TAU;
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Port {
    Plus,
    Minus,
}

impl Port {
    fn sign(self) -> f64 {
        match self {
            Port::Plus => 1.0,
            Port::Minus => -1.0,
        }
    }
}

/// Relative R-to-T phase at the beamsplitter and the output port read out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferenceSetting {
    theta_rt: f64,
    pub port: Port,
}

impl InterferenceSetting {
    pub fn new(theta_rt: f64, port: Port) -> Self {
        Self {
            theta_rt: normalize_phase(theta_rt),
            port,
        }
    }

    pub fn plus(theta_rt: f64) -> Self {
        Self::new(theta_rt, Port::Plus)
    }

    pub fn theta_rt(&self) -> f64 {
        self.theta_rt
    }

    /// `|1 +- e^{i theta}| / sqrt(2)`: the scaling of any T-path difference
    /// vector on this port.
    pub fn distance_factor(&self) -> f64 {
        match self.port {
            Port::Plus => enhancement_factor(self.theta_rt),
            Port::Minus => minus_enhancement_factor(self.theta_rt),
        }
    }

    /// Output of this port for a single (T, R) amplitude pair.
    pub fn apply(&self, alpha_t: Amplitude, alpha_r: Amplitude) -> Amplitude {
        let rotated = Complex64::from_polar(1.0, self.theta_rt) * alpha_r;
        (alpha_t + rotated * self.port.sign()) * FRAC_1_SQRT_2
    }
}

/// Both beamsplitter outputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Combined {
    pub plus: Amplitude,
    pub minus: Amplitude,
}

pub fn combine(alpha_t: Amplitude, alpha_r: Amplitude, theta_rt: f64) -> Result<Combined> {
    ensure_finite_amplitude("alpha_t", alpha_t)?;
    ensure_finite_amplitude("alpha_r", alpha_r)?;
    if !theta_rt.is_finite() {
        return Err(Error::NonFinite("theta_rt"));
    }
    let rotated = Complex64::from_polar(1.0, theta_rt) * alpha_r;
    Ok(Combined {
        plus: (alpha_t + rotated) * FRAC_1_SQRT_2,
        minus: (alpha_t - rotated) * FRAC_1_SQRT_2,
    })
}

/// Pointer pair seen on one beamsplitter port.
pub fn combine_pairs(
    pair_t: &PointerPair,
    pair_r: &PointerPair,
    s: &InterferenceSetting,
) -> PointerPair {
    PointerPair::new(
        s.apply(pair_t.alpha_g, pair_r.alpha_g),
        s.apply(pair_t.alpha_e, pair_r.alpha_e),
    )
}

/// Pointer separation on an interference port, from the T-path separation.
///
/// Both pairs must come from the same drive: `alpha_T - alpha_R` equals the
/// input field for either qubit state.
pub fn interference_distance(
    pair_t: &PointerPair,
    pair_r: &PointerPair,
    s: &InterferenceSetting,
) -> Result<f64> {
    let input_g = pair_t.alpha_g - pair_r.alpha_g;
    let input_e = pair_t.alpha_e - pair_r.alpha_e;
    let scale = [pair_t.alpha_g, pair_t.alpha_e, pair_r.alpha_g, pair_r.alpha_e]
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if (input_g - input_e).norm() > 1e-9 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::InconsistentPair(format!(
            "implied input fields differ: {input_g} vs {input_e}"
        )));
    }
    Ok(s.distance_factor() * pair_t.distance)
}

/// Plus-port enhancement `sqrt(2) cos(theta / 2)` over a single output.
pub fn enhancement_factor(theta_rt: f64) -> f64 {
    SQRT_2 * (0.5 * normalize_phase(theta_rt)).cos()
}

/// Minus-port counterpart `sqrt(2) |sin(theta / 2)|`.
pub fn minus_enhancement_factor(theta_rt: f64) -> f64 {
    SQRT_2 * (0.5 * normalize_phase(theta_rt)).sin().abs()
}

/// Round-trip phase picked up when the cavity sits `position_offset` further
/// along the line: the reflected wave travels the offset twice.
pub fn path_phase_from_spacing(position_offset: f64, wavelength: f64) -> Result<f64> {
    if !(wavelength > 0.0) || !wavelength.is_finite() {
        return Err(Error::param(
            "wavelength",
            format!("must be positive, got {wavelength}"),
        ));
    }
    if !position_offset.is_finite() {
        return Err(Error::NonFinite("position_offset"));
    }
    Ok(normalize_phase(TAU * 2.0 * position_offset / wavelength))
}
