use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dispersive shift chi must be nonzero")]
    ZeroChi,

    #[error("non-finite value in `{0}`")]
    NonFinite(&'static str),

    #[error("frequency grid is empty")]
    EmptyGrid,

    #[error("frequency grid is not strictly increasing at index {0}")]
    NonMonotoneGrid(usize),

    #[error("inconsistent pointer pairs: {0}")]
    InconsistentPair(String),

    #[error("degenerate calibration record: {0}")]
    DegenerateRecord(String),

    #[error("inconsistent calibration data: |exp(i theta)| = {score}")]
    InconsistentData { score: f64 },

    #[error("spectra grids do not match: {0}")]
    GridMismatch(String),

    #[error("transmitted and reflected spectra are collinear; gains are not identifiable")]
    RankDeficient,

    #[error("pointer states coincide, no discrimination axis")]
    ZeroDistance,

    #[error("mixture fit did not converge within {iterations} iterations")]
    FitFailure { iterations: usize },

    #[error("no interior optimum: eta * D^2 * T1 = {0} <= 1")]
    NoInteriorOptimum(f64),

    #[error("{0} is outside the Lambert W domain [-1/e, inf)")]
    LambertDomain(f64),

    #[error("negative measurement time {0}")]
    NegativeTime(f64),

    #[error("invalid shot configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown device preset `{0}`")]
    UnknownPreset(String),

    #[error("malformed preset table: {0}")]
    PresetFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite(name))
    }
}
