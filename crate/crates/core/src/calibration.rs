//! Calibration of the interference phase and of the output-chain gains.
//!
//! The phase procedure probes the cavity at `omega_r - chi` (resonant for
//! the ground state) and compares each output line with itself for the two
//! qubit states, so the unknown gain of every chain cancels. Together with
//! the energy fractions `r_g`, `r_e` this pins down all four T/R amplitudes
//! up to one phase that is absorbed into `theta_RT`.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cavity::{
    ensure_finite_amplitude, reflection, transmission, Amplitude, CavityParams, DriveTone,
    QubitState,
};
use crate::error::{Error, Result};
use crate::interference::normalize_phase;

/// Fractions of the probe energy that leave the cavity through the line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossFactors {
    pub r_g: f64,
    pub r_e: f64,
}

/// Closed-form energy fractions at the calibration drive `omega_r - chi`.
pub fn loss_factors(c: &CavityParams) -> LossFactors {
    let (kc, ki, chi) = (c.kappa_c(), c.kappa_i(), c.chi());
    let k = kc + ki;
    LossFactors {
        r_g: (kc * kc + ki * ki) / (k * k),
        r_e: 1.0 - 2.0 * kc * ki / (k * k + 16.0 * chi * chi),
    }
}

/// Probe tone at `omega_r - chi`, resonant with the ground-state cavity.
pub fn calibration_drive(c: &CavityParams, alpha_in: Amplitude) -> Result<DriveTone> {
    DriveTone::new(c.omega_r() - c.chi(), alpha_in)
}

/// Phase `arg(alpha_e^R / alpha_g^T)` at the calibration drive.
///
/// The reconstruction takes `alpha_g^T` and `alpha_e^R` as real, so the
/// calibrated phase equals the physical beamsplitter phase plus this offset.
pub fn calibration_gauge_offset(c: &CavityParams) -> Result<f64> {
    let d = calibration_drive(c, Complex64::new(1.0, 0.0))?;
    let t_g = transmission(c, QubitState::Ground, &d);
    let r_e = reflection(c, QubitState::Excited, &d);
    if t_g.norm() == 0.0 || r_e.norm() == 0.0 {
        return Err(Error::DegenerateRecord(
            "vanishing reference amplitude at the calibration drive".into(),
        ));
    }
    Ok(normalize_phase((r_e / t_g).arg()))
}

/// Amplitudes recorded on the three output lines for both qubit states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineAmplitudes {
    pub t_g: Amplitude,
    pub t_e: Amplitude,
    pub r_g: Amplitude,
    pub r_e: Amplitude,
    pub plus_g: Amplitude,
    pub plus_e: Amplitude,
}

impl LineAmplitudes {
    fn as_array(&self) -> [Amplitude; 6] {
        [self.t_g, self.t_e, self.r_g, self.r_e, self.plus_g, self.plus_e]
    }

    fn from_array(a: [Amplitude; 6]) -> Self {
        Self {
            t_g: a[0],
            t_e: a[1],
            r_g: a[2],
            r_e: a[3],
            plus_g: a[4],
            plus_e: a[5],
        }
    }

    /// Averages `repetitions` noisy copies of every amplitude. Each copy gets
    /// independent complex Gaussian noise with `E|n|^2 = (sigma_rel |A|)^2`.
    pub fn averaged_noisy<R: Rng + ?Sized>(
        &self,
        sigma_rel: f64,
        repetitions: usize,
        rng: &mut R,
    ) -> Self {
        let reps = repetitions.max(1);
        let clean = self.as_array();
        let mut acc = [Complex64::new(0.0, 0.0); 6];
        for _ in 0..reps {
            for (sum, a) in acc.iter_mut().zip(clean.iter()) {
                let s = sigma_rel * a.norm() * FRAC_1_SQRT_2;
                let n = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
                *sum += a + n * s;
            }
        }
        Self::from_array(acc.map(|s| s / reps as f64))
    }
}

/// Forward model of the phase-calibration measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticProbe {
    /// Interference phase in the calibration gauge (see [`calibration_gauge_offset`]).
    pub theta_rt: f64,
    /// Extra phase picked up by the R mode before the beamsplitter.
    pub r_line_phase: f64,
    /// Complex gains of the T, R and interference output chains.
    pub gains: [Amplitude; 3],
}

impl SyntheticProbe {
    pub fn new(theta_rt: f64) -> Self {
        let one = Complex64::new(1.0, 0.0);
        Self {
            theta_rt,
            r_line_phase: 0.0,
            gains: [one; 3],
        }
    }
}

pub fn synthetic_line_amplitudes(
    c: &CavityParams,
    alpha_in: Amplitude,
    probe: &SyntheticProbe,
) -> Result<LineAmplitudes> {
    ensure_finite_amplitude("alpha_in", alpha_in)?;
    let d = calibration_drive(c, alpha_in)?;
    let t_g = transmission(c, QubitState::Ground, &d);
    let t_e = transmission(c, QubitState::Excited, &d);
    let r_g_raw = reflection(c, QubitState::Ground, &d);
    let r_e_raw = reflection(c, QubitState::Excited, &d);
    let scale = alpha_in.norm();
    if t_g.norm() <= 1e-12 * scale || r_e_raw.norm() <= 1e-12 * scale {
        return Err(Error::DegenerateRecord(
            "ground-state transmission vanishes at the calibration drive (no internal loss?)"
                .into(),
        ));
    }
    // rotate the R pair into the gauge where alpha_e^R is in phase with alpha_g^T
    let gauge = (t_g / t_g.norm()) / (r_e_raw / r_e_raw.norm());
    let r_rot = gauge * Complex64::from_polar(1.0, probe.r_line_phase);
    let r_g = r_g_raw * r_rot;
    let r_e = r_e_raw * r_rot;
    let phase = Complex64::from_polar(1.0, probe.theta_rt);
    let plus_g = (t_g + phase * r_g) * FRAC_1_SQRT_2;
    let plus_e = (t_e + phase * r_e) * FRAC_1_SQRT_2;
    let [g_t, g_r, g_p] = probe.gains;
    Ok(LineAmplitudes {
        t_g: g_t * t_g,
        t_e: g_t * t_e,
        r_g: g_r * r_g,
        r_e: g_r * r_e,
        plus_g: g_p * plus_g,
        plus_e: g_p * plus_e,
    })
}

/// Same-line qubit-state ratios plus what is known about the probe.
///
/// `gamma_r` is ground over excited, inverted relative to the other two.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub gamma_t: Amplitude,
    pub gamma_r: Amplitude,
    pub gamma_plus: Amplitude,
    pub photon_number: f64,
    pub loss: LossFactors,
}

impl CalibrationRecord {
    pub fn new(
        gamma_t: Amplitude,
        gamma_r: Amplitude,
        gamma_plus: Amplitude,
        photon_number: f64,
        loss: LossFactors,
    ) -> Result<Self> {
        let rec = Self {
            gamma_t,
            gamma_r,
            gamma_plus,
            photon_number,
            loss,
        };
        rec.squared_moduli()?;
        Ok(rec)
    }

    pub fn from_lines(lines: &LineAmplitudes, photon_number: f64, loss: LossFactors) -> Result<Self> {
        for (name, z) in [("t_g", lines.t_g), ("r_e", lines.r_e), ("plus_g", lines.plus_g)] {
            if z.norm() == 0.0 {
                return Err(Error::DegenerateRecord(format!("reference amplitude {name} is zero")));
            }
        }
        Self::new(
            lines.t_e / lines.t_g,
            lines.r_g / lines.r_e,
            lines.plus_e / lines.plus_g,
            photon_number,
            loss,
        )
    }

    /// `|alpha_g^T|^2 / N` and `|alpha_e^R|^2 / N` solved from the energy
    /// balance. Both must be positive.
    fn squared_moduli(&self) -> Result<(f64, f64)> {
        for (name, z) in [
            ("gamma_t", self.gamma_t),
            ("gamma_r", self.gamma_r),
            ("gamma_plus", self.gamma_plus),
        ] {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::DegenerateRecord(format!("{name} is not finite")));
            }
        }
        if !(self.photon_number >= 0.0) || !self.photon_number.is_finite() {
            return Err(Error::param(
                "photon_number",
                format!("must be non-negative, got {}", self.photon_number),
            ));
        }
        let LossFactors { r_g, r_e } = self.loss;
        let gt2 = self.gamma_t.norm_sqr();
        let gr2 = self.gamma_r.norm_sqr();
        let den = 1.0 - gt2 * gr2;
        if den == 0.0 {
            return Err(Error::DegenerateRecord("|gamma_T gamma_R| = 1".into()));
        }
        let q_t = (r_g - r_e * gr2) / den;
        let q_r = (r_e - r_g * gt2) / den;
        if !(q_t > 0.0) || !(q_r > 0.0) {
            return Err(Error::DegenerateRecord(format!(
                "energy balance has no solution (|a_g^T|^2/N = {q_t:.3e}, |a_e^R|^2/N = {q_r:.3e})"
            )));
        }
        Ok((q_t, q_r))
    }
}

/// Noiseless calibration record synthesized from the cavity model, with the
/// given interference phase in the calibration gauge.
pub fn measured_ratios(
    c: &CavityParams,
    alpha_in: Amplitude,
    theta_rt: f64,
) -> Result<CalibrationRecord> {
    let lines = synthetic_line_amplitudes(c, alpha_in, &SyntheticProbe::new(theta_rt))?;
    CalibrationRecord::from_lines(&lines, alpha_in.norm_sqr(), loss_factors(c))
}

/// The four T/R amplitudes recovered from a record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructedAmplitudes {
    pub t_g: Amplitude,
    pub t_e: Amplitude,
    pub r_g: Amplitude,
    pub r_e: Amplitude,
}

pub fn reconstruct_amplitudes(rec: &CalibrationRecord) -> Result<ReconstructedAmplitudes> {
    let (q_t, q_r) = rec.squared_moduli()?;
    let n = rec.photon_number;
    let t_g = Complex64::new((n * q_t).sqrt(), 0.0);
    let r_e = Complex64::new((n * q_r).sqrt(), 0.0);
    Ok(ReconstructedAmplitudes {
        t_g,
        t_e: rec.gamma_t * t_g,
        r_g: rec.gamma_r * r_e,
        r_e,
    })
}

/// Bounds on `| |e^{i theta}| - 1 |` for a phase estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyTolerance {
    pub warn: f64,
    pub error: f64,
}

impl Default for ConsistencyTolerance {
    fn default() -> Self {
        Self {
            warn: 0.05,
            error: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaEstimate {
    pub theta_rt: f64,
    /// `|e^{i theta}|` as reconstructed; unity for exact data.
    pub consistency: f64,
    pub warning: bool,
}

pub fn estimate_theta_rt(rec: &CalibrationRecord) -> Result<ThetaEstimate> {
    estimate_theta_rt_with(rec, ConsistencyTolerance::default())
}

pub fn estimate_theta_rt_with(
    rec: &CalibrationRecord,
    tol: ConsistencyTolerance,
) -> Result<ThetaEstimate> {
    let (q_t, q_r) = rec.squared_moduli()?;
    let denom = rec.gamma_plus * rec.gamma_r - 1.0;
    if denom.norm() == 0.0 {
        return Err(Error::DegenerateRecord("gamma_plus * gamma_R = 1".into()));
    }
    let e_theta = (rec.gamma_t - rec.gamma_plus) / denom * (q_t / q_r).sqrt();
    let consistency = e_theta.norm();
    if !consistency.is_finite() {
        return Err(Error::DegenerateRecord("non-finite phase estimate".into()));
    }
    let deviation = (consistency - 1.0).abs();
    if deviation > tol.error {
        return Err(Error::InconsistentData { score: consistency });
    }
    Ok(ThetaEstimate {
        theta_rt: normalize_phase(e_theta.arg()),
        consistency,
        warning: deviation > tol.warn,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub frequency_hz: f64,
    pub value: Amplitude,
}

/// Relative gains `c+/cT` and `c+/cR` of the output chains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainGains {
    pub ratio_plus_t: Amplitude,
    pub ratio_plus_r: Amplitude,
    /// Root-mean-square misfit of the interference spectrum.
    pub residual: f64,
}

/// Least-squares fit of `A+ = (c+/cT) A_T + (c+/cR) A_R` over a shared grid,
/// all points weighted equally.
pub fn fit_chain_gains(
    spectrum_t: &[SpectrumPoint],
    spectrum_r: &[SpectrumPoint],
    spectrum_plus: &[SpectrumPoint],
) -> Result<ChainGains> {
    let n = spectrum_t.len();
    if spectrum_r.len() != n || spectrum_plus.len() != n {
        return Err(Error::GridMismatch(format!(
            "lengths {n}, {}, {}",
            spectrum_r.len(),
            spectrum_plus.len()
        )));
    }
    if n == 0 {
        return Err(Error::EmptyGrid);
    }
    for (i, ((t, r), p)) in spectrum_t.iter().zip(spectrum_r).zip(spectrum_plus).enumerate() {
        let f = t.frequency_hz;
        let tol = 1e-12 * f.abs().max(1.0);
        if (r.frequency_hz - f).abs() > tol || (p.frequency_hz - f).abs() > tol {
            return Err(Error::GridMismatch(format!("frequencies differ at index {i}")));
        }
        for z in [t.value, r.value, p.value] {
            ensure_finite_amplitude("spectrum", z)?;
        }
    }

    // normal equations of the two-unknown complex regression
    let mut s_tt = 0.0;
    let mut s_rr = 0.0;
    let mut s_tr = Complex64::new(0.0, 0.0);
    let mut b_t = Complex64::new(0.0, 0.0);
    let mut b_r = Complex64::new(0.0, 0.0);
    for ((t, r), p) in spectrum_t.iter().zip(spectrum_r).zip(spectrum_plus) {
        s_tt += t.value.norm_sqr();
        s_rr += r.value.norm_sqr();
        s_tr += t.value.conj() * r.value;
        b_t += t.value.conj() * p.value;
        b_r += r.value.conj() * p.value;
    }
    let det = s_tt * s_rr - s_tr.norm_sqr();
    if !(det > 1e-12 * s_tt * s_rr) {
        return Err(Error::RankDeficient);
    }
    if n < 3 {
        return Err(Error::param("spectra", format!("need at least 3 points, got {n}")));
    }
    let ratio_plus_t = (b_t * s_rr - s_tr * b_r) / det;
    let ratio_plus_r = (b_r * s_tt - s_tr.conj() * b_t) / det;
    let sse: f64 = spectrum_t
        .iter()
        .zip(spectrum_r)
        .zip(spectrum_plus)
        .map(|((t, r), p)| (p.value - ratio_plus_t * t.value - ratio_plus_r * r.value).norm_sqr())
        .sum();
    Ok(ChainGains {
        ratio_plus_t,
        ratio_plus_r,
        residual: (sse / n as f64).sqrt(),
    })
}

/// Three output spectra of one qubit state with known chain-gain ratios.
/// The T chain has unit gain. `noise_sigma` adds complex Gaussian noise with
/// `E|n|^2 = noise_sigma^2` to every interference-spectrum point.
#[allow(clippy::too_many_arguments)]
pub fn synthetic_chain_spectra<R: Rng + ?Sized>(
    c: &CavityParams,
    q: QubitState,
    alpha_in: Amplitude,
    theta_rt: f64,
    freq_grid_hz: &[f64],
    ratio_plus_t: Amplitude,
    ratio_plus_r: Amplitude,
    noise_sigma: f64,
    rng: &mut R,
) -> Result<[Vec<SpectrumPoint>; 3]> {
    crate::cavity::validate_grid(freq_grid_hz)?;
    if ratio_plus_r.norm() == 0.0 {
        return Err(Error::param("ratio_plus_r", "must be nonzero"));
    }
    let gain_plus = ratio_plus_t;
    let gain_r = gain_plus / ratio_plus_r;
    let phase = Complex64::from_polar(1.0, theta_rt);
    let mut t = Vec::with_capacity(freq_grid_hz.len());
    let mut r = Vec::with_capacity(freq_grid_hz.len());
    let mut p = Vec::with_capacity(freq_grid_hz.len());
    for &f in freq_grid_hz {
        let d = DriveTone::new(std::f64::consts::TAU * f, alpha_in)?;
        let a_t = transmission(c, q, &d);
        let a_r = phase * reflection(c, q, &d);
        let s = noise_sigma * FRAC_1_SQRT_2;
        let n = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)) * s;
        t.push(SpectrumPoint { frequency_hz: f, value: a_t });
        r.push(SpectrumPoint { frequency_hz: f, value: gain_r * a_r });
        p.push(SpectrumPoint {
            frequency_hz: f,
            value: gain_plus * (a_t + a_r) + n,
        });
    }
    Ok([t, r, p])
}

/// Structured calibration report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub theta_rt_rad: f64,
    pub consistency: f64,
    pub gains: Option<[Amplitude; 2]>,
    pub residual: Option<f64>,
}

impl CalibrationReport {
    pub fn new(theta: &ThetaEstimate, gains: Option<&ChainGains>) -> Self {
        Self {
            theta_rt_rad: theta.theta_rt,
            consistency: theta.consistency,
            gains: gains.map(|g| [g.ratio_plus_t, g.ratio_plus_r]),
            residual: gains.map(|g| g.residual),
        }
    }
}
