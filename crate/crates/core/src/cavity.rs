//! Steady-state response of a symmetric hanger cavity dispersively coupled
//! to a qubit.
//!
//! All frequencies and rates are angular (rad/s). The qubit pulls the cavity
//! resonance to `omega_r + chi * sigma_z`, with the ground state mapped to
//! `sigma_z = -1`. For a drive detuning `d = omega_d - omega_r - chi * sigma_z`
//! the intracavity field and the two outputs are
//!
//! ```text
//! alpha   = sqrt(kappa_c / 2) * alpha_in / (i d + kappa / 2)
//! alpha_R = -(kappa_c / kappa) / (1 + 2 i d / kappa) * alpha_in = -sqrt(kappa_c / 2) * alpha
//! alpha_T = alpha_in + alpha_R
//! ```

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Complex field amplitude on one output path.
pub type Amplitude = Complex64;

pub(crate) fn ensure_finite_amplitude(name: &'static str, z: Amplitude) -> Result<Amplitude> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(Error::NonFinite(name))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    omega_r: f64,
    kappa_c: f64,
    kappa_i: f64,
    chi: f64,
}

impl CavityParams {
    pub fn new(omega_r: f64, kappa_c: f64, kappa_i: f64, chi: f64) -> Result<Self> {
        ensure_finite("omega_r", omega_r)?;
        ensure_finite("kappa_c", kappa_c)?;
        ensure_finite("kappa_i", kappa_i)?;
        ensure_finite("chi", chi)?;
        if omega_r <= 0.0 {
            return Err(Error::param("omega_r", format!("must be positive, got {omega_r}")));
        }
        if kappa_c <= 0.0 {
            return Err(Error::param("kappa_c", format!("must be positive, got {kappa_c}")));
        }
        if kappa_i < 0.0 {
            return Err(Error::param("kappa_i", format!("must be non-negative, got {kappa_i}")));
        }
        Ok(Self {
            omega_r,
            kappa_c,
            kappa_i,
            chi,
        })
    }

    /// Builds rates from a table row given in ordinary frequency units,
    /// using `kappa_c = omega_r / Q_c` and `kappa_i = omega_r / Q_i`.
    pub fn from_quality_factors(f_r_hz: f64, q_i: f64, q_c: f64, chi_hz: f64) -> Result<Self> {
        if !(q_c > 0.0) {
            return Err(Error::param("q_c", format!("must be positive, got {q_c}")));
        }
        if !(q_i > 0.0) {
            return Err(Error::param("q_i", format!("must be positive, got {q_i}")));
        }
        let omega_r = TAU * f_r_hz;
        Self::new(omega_r, omega_r / q_c, omega_r / q_i, TAU * chi_hz)
    }

    pub fn omega_r(&self) -> f64 {
        self.omega_r
    }

    pub fn kappa_c(&self) -> f64 {
        self.kappa_c
    }

    pub fn kappa_i(&self) -> f64 {
        self.kappa_i
    }

    /// Total damping rate `kappa_c + kappa_i`.
    pub fn kappa(&self) -> f64 {
        self.kappa_c + self.kappa_i
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn with_kappa_i(self, kappa_i: f64) -> Result<Self> {
        Self::new(self.omega_r, self.kappa_c, kappa_i, self.chi)
    }

    pub fn with_chi(self, chi: f64) -> Result<Self> {
        Self::new(self.omega_r, self.kappa_c, self.kappa_i, chi)
    }

    pub(crate) fn require_chi(&self) -> Result<()> {
        if self.chi == 0.0 {
            Err(Error::ZeroChi)
        } else {
            Ok(())
        }
    }

    /// `omega_d - omega_r - chi * sigma_z`. The first subtraction is exact for
    /// drives near the resonance.
    fn detuning(&self, omega_d: f64, q: QubitState) -> f64 {
        (omega_d - self.omega_r) - self.chi * q.sigma_z() as f64
    }

    /// Dimensionless response `(kappa_c / kappa) / (1 + 2 i d / kappa)`.
    fn lorentzian(&self, omega_d: f64, q: QubitState) -> Complex64 {
        let kappa = self.kappa();
        let x = 2.0 * self.detuning(omega_d, q) / kappa;
        Complex64::new(1.0, x).inv() * (self.kappa_c / kappa)
    }

    /// The drive frequency that is resonant with the cavity for qubit state `q`.
    pub fn dressed_frequency(&self, q: QubitState) -> f64 {
        self.omega_r + self.chi * q.sigma_z() as f64
    }

    /// Detuning `omega_d - omega_r` that maximizes the pointer distance.
    ///
    /// Zero when `kappa >= 2|chi|`, otherwise `sqrt(chi^2 - kappa^2 / 4)`
    /// (the symmetric maximizer at negative detuning is equivalent).
    pub fn optimal_detuning(&self) -> f64 {
        let k = self.kappa();
        let u = self.chi * self.chi - 0.25 * k * k;
        if u > 0.0 {
            u.sqrt()
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QubitState {
    Ground,
    Excited,
}

impl QubitState {
    pub fn sigma_z(self) -> i8 {
        match self {
            QubitState::Ground => -1,
            QubitState::Excited => 1,
        }
    }

    pub fn from_sigma_z(s: i8) -> Option<Self> {
        match s {
            -1 => Some(QubitState::Ground),
            1 => Some(QubitState::Excited),
            _ => None,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            QubitState::Ground => QubitState::Excited,
            QubitState::Excited => QubitState::Ground,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            QubitState::Ground => "g",
            QubitState::Excited => "e",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveTone {
    pub omega_d: f64,
    pub alpha_in: Amplitude,
}

impl DriveTone {
    pub fn new(omega_d: f64, alpha_in: Amplitude) -> Result<Self> {
        ensure_finite("omega_d", omega_d)?;
        ensure_finite_amplitude("alpha_in", alpha_in)?;
        Ok(Self { omega_d, alpha_in })
    }

    /// Drive at `omega_r + detuning`.
    pub fn at_detuning(c: &CavityParams, detuning: f64, alpha_in: Amplitude) -> Result<Self> {
        Self::new(c.omega_r() + detuning, alpha_in)
    }
}

/// Output path of the hanger cavity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Path {
    #[serde(rename = "T")]
    Transmission,
    #[serde(rename = "R")]
    Reflection,
}

/// Steady-state intracavity field.
pub fn intracavity_steady(c: &CavityParams, q: QubitState, d: &DriveTone) -> Amplitude {
    let denom = Complex64::new(0.5 * c.kappa(), c.detuning(d.omega_d, q));
    d.alpha_in * (0.5 * c.kappa_c()).sqrt() / denom
}

pub fn reflection(c: &CavityParams, q: QubitState, d: &DriveTone) -> Amplitude {
    -c.lorentzian(d.omega_d, q) * d.alpha_in
}

pub fn transmission(c: &CavityParams, q: QubitState, d: &DriveTone) -> Amplitude {
    d.alpha_in + reflection(c, q, d)
}

pub fn output(c: &CavityParams, q: QubitState, d: &DriveTone, path: Path) -> Amplitude {
    match path {
        Path::Transmission => transmission(c, q, d),
        Path::Reflection => reflection(c, q, d),
    }
}

/// Ground and excited pointer states on one output, with their separation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointerPair {
    pub alpha_g: Amplitude,
    pub alpha_e: Amplitude,
    pub distance: f64,
}

impl PointerPair {
    pub fn new(alpha_g: Amplitude, alpha_e: Amplitude) -> Self {
        Self {
            alpha_g,
            alpha_e,
            distance: (alpha_e - alpha_g).norm(),
        }
    }

    pub fn get(&self, q: QubitState) -> Amplitude {
        match q {
            QubitState::Ground => self.alpha_g,
            QubitState::Excited => self.alpha_e,
        }
    }

    /// Applies the same complex linear map to both pointer states.
    pub fn map(&self, f: impl Fn(Amplitude) -> Amplitude) -> Self {
        Self::new(f(self.alpha_g), f(self.alpha_e))
    }
}

/// Pointer states computed from the full responses of one output.
pub fn pointer_pair(c: &CavityParams, d: &DriveTone, path: Path) -> PointerPair {
    PointerPair::new(
        output(c, QubitState::Ground, d, path),
        output(c, QubitState::Excited, d, path),
    )
}

/// Closed-form separation of the two pointer states.
///
/// Identical for the transmitted and reflected outputs of a symmetric cavity;
/// `path` only documents which output the caller has in mind.
pub fn pointer_distance(c: &CavityParams, d: &DriveTone, _path: Path) -> Result<f64> {
    c.require_chi()?;
    let k = c.kappa();
    let chi = c.chi().abs();
    let delta = d.omega_d - c.omega_r();
    let a = k * k + 4.0 * chi * chi - 4.0 * delta * delta;
    let b = 4.0 * k * delta;
    Ok(4.0 * c.kappa_c() * chi * d.alpha_in.norm() / a.hypot(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IqPoint {
    pub omega: f64,
    pub transmitted: Amplitude,
    pub reflected: Amplitude,
}

/// Sweeps the drive frequency and records both outputs at each grid point.
pub fn iq_circle(
    c: &CavityParams,
    q: QubitState,
    alpha_in: Amplitude,
    freq_grid: &[f64],
) -> Result<Vec<IqPoint>> {
    validate_grid(freq_grid)?;
    ensure_finite_amplitude("alpha_in", alpha_in)?;
    Ok(freq_grid
        .iter()
        .map(|&omega| {
            let d = DriveTone { omega_d: omega, alpha_in };
            IqPoint {
                omega,
                transmitted: transmission(c, q, &d),
                reflected: reflection(c, q, &d),
            }
        })
        .collect())
}

pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    for (i, w) in grid.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::NonMonotoneGrid(i + 1));
        }
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("freq_grid"));
    }
    Ok(())
}

/// `n` evenly spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { stop } else { start + step * i as f64 })
                .collect()
        }
    }
}

/// Measurement window used to model relaxation shrinking the excited-state
/// IQ circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxationWindow {
    pub t_m: f64,
    pub t1: f64,
    /// Phase shift of the response between qubit states; `None` uses `4 chi / kappa`.
    pub delta: Option<f64>,
}

impl RelaxationWindow {
    pub fn new(t_m: f64, t1: f64) -> Self {
        Self { t_m, t1, delta: None }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_m >= 0.0) {
            return Err(Error::param("t_m", format!("must be non-negative, got {}", self.t_m)));
        }
        if !(self.t1 > 0.0) {
            return Err(Error::param("t1", format!("must be positive, got {}", self.t1)));
        }
        if let Some(delta) = self.delta {
            ensure_finite("delta", delta)?;
        }
        Ok(())
    }
}

/// IQ-circle diameters normalized to `|alpha_in| = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleDiameters {
    pub ground: f64,
    pub excited: f64,
}

/// Diameter of the excited-state circle when part of the window is spent
/// relaxed to the ground state.
pub fn relaxed_diameter(c: &CavityParams, w: &RelaxationWindow) -> Result<CircleDiameters> {
    w.validate()?;
    let delta = w.delta.unwrap_or(4.0 * c.chi() / c.kappa());
    let ground = c.kappa_c() / c.kappa();
    let survive = (-w.t_m / (2.0 * w.t1)).exp();
    let mixed = Complex64::new(1.0 - survive, 0.0) + Complex64::from_polar(survive, delta);
    Ok(CircleDiameters {
        ground,
        excited: ground * mixed.norm(),
    })
}
