//! Shipped device presets (`presets/devices.toml`).

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::cavity::CavityParams;
use crate::error::{Error, Result};

pub const DEVICES_TOML: &str = include_str!("../presets/devices.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DevicePreset {
    pub name: String,
    pub cavity_frequency_hz: f64,
    pub q_i: f64,
    pub q_c: f64,
    pub qubit_frequency_hz: f64,
    pub chi_hz: f64,
    pub t1_s: f64,
    pub theta_rt: f64,
}

impl DevicePreset {
    pub fn cavity(&self) -> Result<CavityParams> {
        CavityParams::from_quality_factors(self.cavity_frequency_hz, self.q_i, self.q_c, self.chi_hz)
    }

    pub fn omega_q(&self) -> f64 {
        TAU * self.qubit_frequency_hz
    }
}

/// Single-shot chain settings matched to target overlap errors at 900 ns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedReadout {
    pub device: String,
    pub t_m_s: f64,
    pub probe_amplitude: f64,
    pub detuning_hz: f64,
    pub c0_t: f64,
    pub c0_plus: f64,
    pub eta: f64,
    pub p_thermal: f64,
    pub target_overlap_t: f64,
    pub target_overlap_plus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetTable {
    pub device: Vec<DevicePreset>,
    pub matched_readout: MatchedReadout,
}

impl PresetTable {
    pub fn builtin() -> Self {
        Self::parse(DEVICES_TOML).expect("shipped preset table parses")
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::PresetFormat(e.to_string()))
    }

    pub fn get(&self, name: &str) -> Result<&DevicePreset> {
        self.device
            .iter()
            .find(|d| d.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::UnknownPreset(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.device.iter().map(|d| d.name.as_str())
    }
}

pub fn device(name: &str) -> Result<DevicePreset> {
    PresetTable::builtin().get(name).cloned()
}
