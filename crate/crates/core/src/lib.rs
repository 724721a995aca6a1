//! Dispersive qubit readout through a symmetric hanger cavity, with the
//! transmitted and reflected outputs recombined on a beamsplitter.
//!
//! - [`cavity`]: steady-state responses, pointer-state distances, relaxed IQ circles
//! - [`interference`]: beamsplitter combination and the enhancement factor
//! - [`calibration`]: interference-phase reconstruction and output-chain gain fits
//! - [`readout`]: Monte Carlo single-shot readout and histogram analysis
//! - [`budget`]: closed-form error budget and the optimal measurement time
//! - [`special`]: error function and Lambert W

pub mod budget;
pub mod calibration;
pub mod cavity;
pub mod error;
pub mod interference;
pub mod io;
pub mod presets;
pub mod readout;
pub mod special;

pub use num_complex::Complex64;

pub use budget::{ErrorBudget, ErrorModelParams};
pub use calibration::{CalibrationRecord, ChainGains, LossFactors};
pub use cavity::{Amplitude, CavityParams, DriveTone, Path, PointerPair, QubitState, RelaxationWindow};
pub use error::{Error, Result};
pub use interference::{InterferenceSetting, Port};
pub use readout::{ChainNoise, OutputPath, ShotAnalysis, ShotBatch, ShotConfig};
