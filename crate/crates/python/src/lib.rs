//! Python bindings: `import pathread`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use pathread_core::budget::{optimal_time as core_optimal_time, ErrorModelParams};
use pathread_core::calibration::{
    estimate_theta_rt, loss_factors as core_loss_factors, synthetic_line_amplitudes, CalibrationRecord,
    SyntheticProbe,
};
use pathread_core::cavity::{pointer_pair, reflection, transmission};
use pathread_core::interference::{combine as core_combine, enhancement_factor as core_enhancement};
use pathread_core::presets::PresetTable;
use pathread_core::readout::{analyze, optimal_threshold, pointer_means, simulate_shots, RelaxationModel};
use pathread_core::{
    CavityParams, ChainNoise, DriveTone, Error, InterferenceSetting, OutputPath, Path, QubitState, ShotConfig,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter { .. }
        | Error::ZeroChi
        | Error::NonFinite(_)
        | Error::EmptyGrid
        | Error::NonMonotoneGrid(_)
        | Error::InvalidConfig(_)
        | Error::UnknownPreset(_)
        | Error::NegativeTime(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn state(s: &str) -> PyResult<QubitState> {
    match s {
        "g" | "ground" => Ok(QubitState::Ground),
        "e" | "excited" => Ok(QubitState::Excited),
        _ => Err(PyValueError::new_err(format!("state must be 'g' or 'e', got {s:?}"))),
    }
}

fn output_path(path: &str, theta_rt: f64) -> PyResult<OutputPath> {
    match path {
        "T" => Ok(OutputPath::Transmission),
        "R" => Ok(OutputPath::Reflection),
        "T+R" | "plus" => Ok(OutputPath::Interference(InterferenceSetting::plus(theta_rt))),
        _ => Err(PyValueError::new_err(format!("path must be 'T', 'R' or 'T+R', got {path:?}"))),
    }
}

/// Hanger cavity dispersively coupled to a qubit. Frequencies in Hz.
#[pyclass(frozen, name = "Cavity", module = "pathread")]
struct PyCavity {
    inner: CavityParams,
}

#[pymethods]
impl PyCavity {
    #[new]
    fn new(cavity_frequency_hz: f64, q_i: f64, q_c: f64, chi_hz: f64) -> PyResult<Self> {
        let inner = CavityParams::from_quality_factors(cavity_frequency_hz, q_i, q_c, chi_hz).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Cavity of a shipped device preset (`Q1` to `Q5`).
    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        let dev = pathread_core::presets::device(name).map_err(to_py)?;
        Ok(Self { inner: dev.cavity().map_err(to_py)? })
    }

    #[getter]
    fn omega_r(&self) -> f64 {
        self.inner.omega_r()
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa()
    }

    #[getter]
    fn kappa_c(&self) -> f64 {
        self.inner.kappa_c()
    }

    #[getter]
    fn kappa_i(&self) -> f64 {
        self.inner.kappa_i()
    }

    #[getter]
    fn chi(&self) -> f64 {
        self.inner.chi()
    }

    /// Transmitted field for a drive at `omega_r + detuning` (rad/s).
    #[pyo3(signature = (state_label, detuning, amplitude = Complex64::new(1.0, 0.0)))]
    fn transmission(&self, state_label: &str, detuning: f64, amplitude: Complex64) -> PyResult<Complex64> {
        let d = DriveTone::at_detuning(&self.inner, detuning, amplitude).map_err(to_py)?;
        Ok(transmission(&self.inner, state(state_label)?, &d))
    }

    #[pyo3(signature = (state_label, detuning, amplitude = Complex64::new(1.0, 0.0)))]
    fn reflection(&self, state_label: &str, detuning: f64, amplitude: Complex64) -> PyResult<Complex64> {
        let d = DriveTone::at_detuning(&self.inner, detuning, amplitude).map_err(to_py)?;
        Ok(reflection(&self.inner, state(state_label)?, &d))
    }

    /// Ground-to-excited pointer separation on `T`, `R` or `T+R`.
    #[pyo3(signature = (detuning, path = "T", theta_rt = 0.0, amplitude = 1.0))]
    fn pointer_distance(&self, detuning: f64, path: &str, theta_rt: f64, amplitude: f64) -> PyResult<f64> {
        let d = DriveTone::at_detuning(&self.inner, detuning, Complex64::new(amplitude, 0.0)).map_err(to_py)?;
        Ok(match output_path(path, theta_rt)? {
            OutputPath::Transmission => pointer_pair(&self.inner, &d, Path::Transmission).distance,
            p => pointer_means(&self.inner, &d, &p).distance,
        })
    }

    /// `(r_g, r_e)`: energy fractions leaving through the line at the
    /// calibration drive.
    fn loss_factors(&self) -> (f64, f64) {
        let l = core_loss_factors(&self.inner);
        (l.r_g, l.r_e)
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "Cavity(f_r={:.6e} Hz, kappa_c={:.4e}, kappa_i={:.4e}, chi={:.4e} rad/s)",
            c.omega_r() / TAU,
            c.kappa_c(),
            c.kappa_i(),
            c.chi()
        )
    }
}

#[pyfunction]
fn device_names() -> Vec<String> {
    PresetTable::builtin().names().map(str::to_owned).collect()
}

/// `sqrt(2) cos(theta / 2)`.
#[pyfunction]
fn enhancement_factor(theta_rt: f64) -> f64 {
    core_enhancement(theta_rt)
}

/// Both beamsplitter outputs `(plus, minus)`.
#[pyfunction]
fn combine(alpha_t: Complex64, alpha_r: Complex64, theta_rt: f64) -> PyResult<(Complex64, Complex64)> {
    let c = core_combine(alpha_t, alpha_r, theta_rt).map_err(to_py)?;
    Ok((c.plus, c.minus))
}

/// Simulates the phase calibration and returns `(theta_rt, consistency)`.
#[pyfunction]
#[pyo3(signature = (cavity, theta_rt, noise_rel = 0.0, repetitions = 40, seed = 0))]
fn estimate_theta(
    cavity: &PyCavity,
    theta_rt: f64,
    noise_rel: f64,
    repetitions: usize,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let c = &cavity.inner;
    let a = Complex64::new(1.0, 0.0);
    let mut lines = synthetic_line_amplitudes(c, a, &SyntheticProbe::new(theta_rt)).map_err(to_py)?;
    if noise_rel > 0.0 {
        lines = lines.averaged_noisy(noise_rel, repetitions, &mut ChaCha8Rng::seed_from_u64(seed));
    }
    let rec = CalibrationRecord::from_lines(&lines, 1.0, core_loss_factors(c)).map_err(to_py)?;
    let est = estimate_theta_rt(&rec).map_err(to_py)?;
    Ok((est.theta_rt, est.consistency))
}

/// Optimal integration time and the error budget there.
#[pyfunction]
#[pyo3(signature = (cavity, eta, n_c, t1, path = "T", theta_rt = 0.0, qubit_frequency_hz = 6e9, t_e = 0.02, include_thermal = true))]
#[allow(clippy::too_many_arguments)]
fn optimal_time<'py>(
    py: Python<'py>,
    cavity: &PyCavity,
    eta: f64,
    n_c: f64,
    t1: f64,
    path: &str,
    theta_rt: f64,
    qubit_frequency_hz: f64,
    t_e: f64,
    include_thermal: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let p = ErrorModelParams {
        eta,
        n_c,
        t1,
        omega_q: TAU * qubit_frequency_hz,
        t_e,
        cavity: cavity.inner,
        path: output_path(path, theta_rt)?,
        include_thermal,
    };
    let (t, b) = core_optimal_time(&p).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("t_opt", t)?;
    d.set_item("p_m", b.p_m)?;
    d.set_item("p_t1", b.p_t1)?;
    d.set_item("p_th", b.p_th)?;
    d.set_item("total", b.total)?;
    d.set_item("fidelity", b.fidelity())?;
    Ok(d)
}

/// Monte Carlo single-shot run with the shipped matched chain settings.
#[pyfunction]
#[pyo3(signature = (path = "T", t_m = None, shots = 100_000, seed = 1729, physical_relaxation = false))]
fn single_shot<'py>(
    py: Python<'py>,
    path: &str,
    t_m: Option<f64>,
    shots: usize,
    seed: u64,
    physical_relaxation: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let table = PresetTable::builtin();
    let pm = &table.matched_readout;
    let dev = table.get(&pm.device).map_err(to_py)?;
    let c = dev.cavity().map_err(to_py)?;
    let out = output_path(path, dev.theta_rt)?;
    let c0 = match out {
        OutputPath::Interference(_) => pm.c0_plus,
        _ => pm.c0_t,
    };
    let drive = DriveTone::at_detuning(&c, TAU * pm.detuning_hz, Complex64::new(pm.probe_amplitude, 0.0))
        .map_err(to_py)?;
    let means = pointer_means(&c, &drive, &out);
    let noise = ChainNoise::from_efficiency(pm.eta, c0).map_err(to_py)?;
    let t1 = dev.t1_s;
    let analysis = py.detach(|| {
        let mut cfg = ShotConfig::new(t_m.unwrap_or(pm.t_m_s), shots, QubitState::Ground, seed);
        cfg.p_thermal = pm.p_thermal;
        if physical_relaxation {
            cfg.relaxation = RelaxationModel::Physical;
        }
        let g = simulate_shots(&means, &noise, &cfg, t1)?;
        cfg.prepared = QubitState::Excited;
        cfg.seed = seed.wrapping_add(1);
        let e = simulate_shots(&means, &noise, &cfg, t1)?;
        analyze(&g, &e, optimal_threshold(&means, g.sigma)?)
    });
    let a = analysis.map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("distance", means.distance)?;
    d.set_item("threshold", a.v_th)?;
    d.set_item("p_e_given_g", a.p_e_given_g)?;
    d.set_item("p_g_given_e", a.p_g_given_e)?;
    d.set_item("epsilon", a.epsilon)?;
    d.set_item("overlap_error", a.gaussian_overlap_error)?;
    Ok(d)
}

#[pymodule]
fn pathread(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCavity>()?;
    m.add_function(wrap_pyfunction!(device_names, m)?)?;
    m.add_function(wrap_pyfunction!(enhancement_factor, m)?)?;
    m.add_function(wrap_pyfunction!(combine, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_theta, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_time, m)?)?;
    m.add_function(wrap_pyfunction!(single_shot, m)?)?;
    Ok(())
}
