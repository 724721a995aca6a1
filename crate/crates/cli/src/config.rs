//! Experiment configuration: TOML file schema, precedence and validation.
//!
//! Precedence is command-line flag, then config file, then preset. The
//! output directory falls back to `PATHREAD_OUT` and then `pathread-out`.

use std::f64::consts::PI;
use std::path::PathBuf;

use pathread_core::presets::{DevicePreset, PresetTable};
use pathread_core::readout::RelaxationModel;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_SEED: u64 = 1729;
pub const DEFAULT_OUT_DIR: &str = "pathread-out";
pub const OUT_DIR_ENV: &str = "PATHREAD_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    IqSweep,
    DistanceSweep,
    BetaCurve,
    CalibrateTheta,
    SingleShot,
    ErrorVsTime,
    OptimalError,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::IqSweep => "iq-sweep",
            Experiment::DistanceSweep => "distance-sweep",
            Experiment::BetaCurve => "beta-curve",
            Experiment::CalibrateTheta => "calibrate-theta",
            Experiment::SingleShot => "single-shot",
            Experiment::ErrorVsTime => "error-vs-time",
            Experiment::OptimalError => "optimal-error",
        }
    }
}

/// Inline device fields; any field given overrides the named preset.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityOverride {
    pub name: Option<String>,
    pub cavity_frequency_hz: Option<f64>,
    pub q_i: Option<f64>,
    pub q_c: Option<f64>,
    pub qubit_frequency_hz: Option<f64>,
    pub chi_hz: Option<f64>,
    pub t1_s: Option<f64>,
    pub theta_rt: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IqSweep {
    /// Half-width of the sweep around the bare cavity frequency, in units of kappa.
    pub span_kappa: f64,
    pub points: usize,
    pub probe_amplitude: f64,
    pub theta_rt: Option<f64>,
}

impl Default for IqSweep {
    fn default() -> Self {
        Self {
            span_kappa: 5.0,
            points: 401,
            probe_amplitude: 1.0,
            theta_rt: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistanceSweep {
    pub span_kappa: f64,
    pub points: usize,
    pub probe_amplitude: f64,
    pub theta_rt: Option<f64>,
}

impl Default for DistanceSweep {
    fn default() -> Self {
        Self {
            span_kappa: 3.0,
            points: 601,
            probe_amplitude: 1.0,
            theta_rt: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BetaCurve {
    pub theta_min: f64,
    pub theta_max: f64,
    pub points: usize,
    /// Probe grid used for the end-to-end maxima.
    pub frequency_points: usize,
    pub span_kappa: f64,
}

impl Default for BetaCurve {
    fn default() -> Self {
        Self {
            theta_min: -PI,
            theta_max: PI,
            points: 181,
            frequency_points: 241,
            span_kappa: 3.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrateTheta {
    /// Presets to calibrate; empty means the configured device only.
    pub devices: Vec<String>,
    pub probe_amplitude: f64,
    /// Relative complex noise on every recorded amplitude.
    pub noise_rel: f64,
    pub repetitions: usize,
    pub trials: usize,
    pub chain_fit: bool,
    pub chain_points: usize,
    pub chain_span_kappa: f64,
    pub chain_noise: f64,
    pub ratio_plus_t: [f64; 2],
    pub ratio_plus_r: [f64; 2],
}

impl Default for CalibrateTheta {
    fn default() -> Self {
        Self {
            devices: PresetTable::builtin().names().map(str::to_owned).collect(),
            probe_amplitude: 1.0,
            noise_rel: 0.0,
            repetitions: 40,
            trials: 1,
            chain_fit: true,
            chain_points: 401,
            chain_span_kappa: 5.0,
            chain_noise: 0.0,
            ratio_plus_t: [2.0, 0.0],
            ratio_plus_r: [3.0, 1.0],
        }
    }
}

/// Readout-chain settings shared by the two Monte Carlo experiments.
/// Unset fields come from the shipped matched-readout block or the device.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainSettings {
    pub eta: Option<f64>,
    pub c0_t: Option<f64>,
    pub c0_plus: Option<f64>,
    pub p_thermal: Option<f64>,
    pub detuning_hz: Option<f64>,
    pub probe_amplitude: Option<f64>,
    pub theta_rt: Option<f64>,
    pub t1_s: Option<f64>,
    pub relaxation: Option<RelaxationModel>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SingleShot {
    pub t_m_s: Option<f64>,
    pub shots: usize,
    pub bins: usize,
    pub export_shots: bool,
    #[serde(flatten)]
    pub chain: ChainSettings,
}

impl Default for SingleShot {
    fn default() -> Self {
        Self {
            t_m_s: None,
            shots: 100_000,
            bins: 100,
            export_shots: false,
            chain: ChainSettings::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErrorVsTime {
    pub t_min_s: f64,
    pub t_max_s: f64,
    pub points: usize,
    pub shots: usize,
    #[serde(flatten)]
    pub chain: ChainSettings,
}

impl Default for ErrorVsTime {
    fn default() -> Self {
        Self {
            t_min_s: 200e-9,
            t_max_s: 2e-6,
            points: 19,
            shots: 50_000,
            chain: ChainSettings::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimalError {
    pub eta: f64,
    pub n_c: f64,
    pub t1_min_s: f64,
    pub t1_max_s: f64,
    pub points: usize,
    pub qubit_frequency_hz: f64,
    pub t_e_k: f64,
    pub theta_rt: f64,
    pub include_thermal: bool,
}

impl Default for OptimalError {
    fn default() -> Self {
        Self {
            eta: 0.25,
            n_c: 20.0,
            t1_min_s: 1e-6,
            t1_max_s: 100e-6,
            points: 41,
            qubit_frequency_hz: 6e9,
            t_e_k: 0.02,
            theta_rt: 0.0,
            include_thermal: true,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub device: Option<String>,
    pub seed: Option<u64>,
    pub cavity: Option<CavityOverride>,
    pub output: OutputSection,
    pub iq_sweep: IqSweep,
    pub distance_sweep: DistanceSweep,
    pub beta_curve: BetaCurve,
    pub calibrate_theta: CalibrateTheta,
    pub single_shot: SingleShot,
    pub error_vs_time: ErrorVsTime,
    pub optimal_error: OptimalError,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Overrides taken from the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub device: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

/// Fully resolved chain settings.
#[derive(Debug, Clone, Serialize)]
pub struct Chain {
    pub eta: f64,
    pub c0_t: f64,
    pub c0_plus: f64,
    pub p_thermal: f64,
    pub detuning_hz: f64,
    pub probe_amplitude: f64,
    pub theta_rt: f64,
    pub t1_s: f64,
    pub relaxation: RelaxationModel,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Section {
    IqSweep(IqSweep),
    DistanceSweep(DistanceSweep),
    BetaCurve(BetaCurve),
    CalibrateTheta(CalibrateTheta),
    SingleShot { t_m_s: f64, shots: usize, bins: usize, export_shots: bool, chain: Chain },
    ErrorVsTime { t_min_s: f64, t_max_s: f64, points: usize, shots: usize, chain: Chain },
    OptimalError(OptimalError),
}

/// Everything an experiment needs; serialized into every output header.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub experiment: Experiment,
    pub seed: u64,
    pub format: Format,
    pub device: DevicePreset,
    pub section: Section,
    #[serde(skip)]
    pub out_dir: PathBuf,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(format!("`{name}` must be positive and finite, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(format!("`{name}` must be finite, got {v}")))
    }
}

fn unit_interval(name: &str, v: f64) -> Result<f64, CliError> {
    if (0.0..1.0).contains(&v) {
        Ok(v)
    } else {
        Err(invalid(format!("`{name}` must lie in [0, 1), got {v}")))
    }
}

fn at_least(name: &str, v: usize, min: usize) -> Result<usize, CliError> {
    if v >= min {
        Ok(v)
    } else {
        Err(invalid(format!("`{name}` must be at least {min}, got {v}")))
    }
}

fn range(lo_name: &str, lo: f64, hi_name: &str, hi: f64) -> Result<(), CliError> {
    finite(lo_name, lo)?;
    finite(hi_name, hi)?;
    if lo < hi {
        Ok(())
    } else {
        Err(invalid(format!("`{lo_name}` ({lo}) must be below `{hi_name}` ({hi})")))
    }
}

fn resolve_device(file: &FileConfig, ov: &Overrides, table: &PresetTable) -> Result<DevicePreset, CliError> {
    let name = ov.device.as_ref().or(file.device.as_ref());
    let inline = file.cavity.clone().unwrap_or_default();
    let base = match name {
        Some(n) => Some(table.get(n).map_err(|e| invalid(e.to_string()))?.clone()),
        None if file.cavity.is_none() => Some(table.get(&table.matched_readout.device).unwrap().clone()),
        None => None,
    };
    let field = |v: Option<f64>, from: Option<f64>, key: &str| {
        v.or(from)
            .ok_or_else(|| invalid(format!("inline device needs `cavity.{key}` when no preset is named")))
    };
    let b = base.as_ref();
    let d = DevicePreset {
        name: inline
            .name
            .clone()
            .or_else(|| b.map(|d| d.name.clone()))
            .unwrap_or_else(|| "inline".into()),
        cavity_frequency_hz: field(inline.cavity_frequency_hz, b.map(|d| d.cavity_frequency_hz), "cavity_frequency_hz")?,
        q_i: field(inline.q_i, b.map(|d| d.q_i), "q_i")?,
        q_c: field(inline.q_c, b.map(|d| d.q_c), "q_c")?,
        qubit_frequency_hz: field(inline.qubit_frequency_hz, b.map(|d| d.qubit_frequency_hz), "qubit_frequency_hz")?,
        chi_hz: field(inline.chi_hz, b.map(|d| d.chi_hz), "chi_hz")?,
        t1_s: field(inline.t1_s, b.map(|d| d.t1_s), "t1_s")?,
        theta_rt: field(inline.theta_rt, b.map(|d| d.theta_rt), "theta_rt")?,
    };
    positive("cavity_frequency_hz", d.cavity_frequency_hz)?;
    positive("qubit_frequency_hz", d.qubit_frequency_hz)?;
    positive("t1_s", d.t1_s)?;
    finite("theta_rt", d.theta_rt)?;
    finite("chi_hz", d.chi_hz)?;
    d.cavity().map_err(|e| invalid(e.to_string()))?;
    Ok(d)
}

fn resolve_chain(c: &ChainSettings, dev: &DevicePreset, table: &PresetTable) -> Result<Chain, CliError> {
    let pm = &table.matched_readout;
    let chain = Chain {
        eta: c.eta.unwrap_or(pm.eta),
        c0_t: c.c0_t.unwrap_or(pm.c0_t),
        c0_plus: c.c0_plus.unwrap_or(pm.c0_plus),
        p_thermal: c.p_thermal.unwrap_or(pm.p_thermal),
        detuning_hz: c.detuning_hz.unwrap_or(pm.detuning_hz),
        probe_amplitude: c.probe_amplitude.unwrap_or(pm.probe_amplitude),
        theta_rt: c.theta_rt.unwrap_or(dev.theta_rt),
        t1_s: c.t1_s.unwrap_or(dev.t1_s),
        relaxation: c.relaxation.unwrap_or_default(),
    };
    if !(chain.eta > 0.0 && chain.eta <= 1.0) {
        return Err(invalid(format!("`eta` must lie in (0, 1], got {}", chain.eta)));
    }
    positive("c0_t", chain.c0_t)?;
    positive("c0_plus", chain.c0_plus)?;
    unit_interval("p_thermal", chain.p_thermal)?;
    finite("detuning_hz", chain.detuning_hz)?;
    positive("probe_amplitude", chain.probe_amplitude)?;
    finite("theta_rt", chain.theta_rt)?;
    positive("t1_s", chain.t1_s)?;
    Ok(chain)
}

pub fn resolve(
    experiment: Experiment,
    file: &FileConfig,
    ov: &Overrides,
    env_out: Option<PathBuf>,
) -> Result<Resolved, CliError> {
    let table = PresetTable::builtin();
    let device = resolve_device(file, ov, &table)?;
    let section = match experiment {
        Experiment::IqSweep => {
            let s = file.iq_sweep.clone();
            positive("iq_sweep.span_kappa", s.span_kappa)?;
            at_least("iq_sweep.points", s.points, 1)?;
            positive("iq_sweep.probe_amplitude", s.probe_amplitude)?;
            if let Some(t) = s.theta_rt {
                finite("iq_sweep.theta_rt", t)?;
            }
            Section::IqSweep(s)
        }
        Experiment::DistanceSweep => {
            let s = file.distance_sweep.clone();
            positive("distance_sweep.span_kappa", s.span_kappa)?;
            at_least("distance_sweep.points", s.points, 1)?;
            positive("distance_sweep.probe_amplitude", s.probe_amplitude)?;
            if let Some(t) = s.theta_rt {
                finite("distance_sweep.theta_rt", t)?;
            }
            Section::DistanceSweep(s)
        }
        Experiment::BetaCurve => {
            let s = file.beta_curve.clone();
            range("beta_curve.theta_min", s.theta_min, "beta_curve.theta_max", s.theta_max)?;
            at_least("beta_curve.points", s.points, 2)?;
            at_least("beta_curve.frequency_points", s.frequency_points, 1)?;
            positive("beta_curve.span_kappa", s.span_kappa)?;
            Section::BetaCurve(s)
        }
        Experiment::CalibrateTheta => {
            let mut s = file.calibrate_theta.clone();
            if s.devices.is_empty() {
                s.devices = vec![device.name.clone()];
            }
            for name in &s.devices {
                if name != &device.name {
                    table.get(name).map_err(|e| invalid(e.to_string()))?;
                }
            }
            positive("calibrate_theta.probe_amplitude", s.probe_amplitude)?;
            if !(s.noise_rel >= 0.0 && s.noise_rel.is_finite()) {
                return Err(invalid("`calibrate_theta.noise_rel` must be nonnegative"));
            }
            at_least("calibrate_theta.repetitions", s.repetitions, 1)?;
            at_least("calibrate_theta.trials", s.trials, 1)?;
            if s.chain_fit {
                at_least("calibrate_theta.chain_points", s.chain_points, 3)?;
                positive("calibrate_theta.chain_span_kappa", s.chain_span_kappa)?;
                if !(s.chain_noise >= 0.0 && s.chain_noise.is_finite()) {
                    return Err(invalid("`calibrate_theta.chain_noise` must be nonnegative"));
                }
                for v in s.ratio_plus_t.iter().chain(&s.ratio_plus_r) {
                    finite("calibrate_theta.ratio", *v)?;
                }
                if s.ratio_plus_r == [0.0, 0.0] {
                    return Err(invalid("`calibrate_theta.ratio_plus_r` must be nonzero"));
                }
            }
            Section::CalibrateTheta(s)
        }
        Experiment::SingleShot => {
            let s = &file.single_shot;
            let t_m_s = positive("single_shot.t_m_s", s.t_m_s.unwrap_or(table.matched_readout.t_m_s))?;
            Section::SingleShot {
                t_m_s,
                shots: at_least("single_shot.shots", s.shots, 1)?,
                bins: at_least("single_shot.bins", s.bins, 1)?,
                export_shots: s.export_shots,
                chain: resolve_chain(&s.chain, &device, &table)?,
            }
        }
        Experiment::ErrorVsTime => {
            let s = &file.error_vs_time;
            positive("error_vs_time.t_min_s", s.t_min_s)?;
            range("error_vs_time.t_min_s", s.t_min_s, "error_vs_time.t_max_s", s.t_max_s)?;
            Section::ErrorVsTime {
                t_min_s: s.t_min_s,
                t_max_s: s.t_max_s,
                points: at_least("error_vs_time.points", s.points, 2)?,
                shots: at_least("error_vs_time.shots", s.shots, 1)?,
                chain: resolve_chain(&s.chain, &device, &table)?,
            }
        }
        Experiment::OptimalError => {
            let s = file.optimal_error.clone();
            if !(s.eta > 0.0 && s.eta <= 1.0) {
                return Err(invalid(format!("`optimal_error.eta` must lie in (0, 1], got {}", s.eta)));
            }
            positive("optimal_error.n_c", s.n_c)?;
            positive("optimal_error.t1_min_s", s.t1_min_s)?;
            range("optimal_error.t1_min_s", s.t1_min_s, "optimal_error.t1_max_s", s.t1_max_s)?;
            at_least("optimal_error.points", s.points, 2)?;
            positive("optimal_error.qubit_frequency_hz", s.qubit_frequency_hz)?;
            positive("optimal_error.t_e_k", s.t_e_k)?;
            finite("optimal_error.theta_rt", s.theta_rt)?;
            Section::OptimalError(s)
        }
    };
    let out_dir = ov
        .out
        .clone()
        .or_else(|| file.output.dir.clone())
        .or(env_out)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    Ok(Resolved {
        experiment,
        seed: ov.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        format: ov.format.or(file.output.format).unwrap_or(Format::Csv),
        device,
        section,
        out_dir,
    })
}
