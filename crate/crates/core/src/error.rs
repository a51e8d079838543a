use thiserror::Error;

/// Everything that can go wrong while building inputs or running the
/// numerics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate geometry: ball radius {r} must be strictly less than rod length {l}")]
    DegenerateGeometry { r: f64, l: f64 },

    #[error("overdamped parameters: g/l = {stiffness} <= (C/2ml)^2 = {decay_sq}")]
    Overdamped { stiffness: f64, decay_sq: f64 },

    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },

    #[error("event localization did not converge near t = {t} after {iterations} bisections")]
    NoConvergence { t: f64, iterations: u32 },

    #[error("insufficient peaks: found {found}, need at least {needed}")]
    InsufficientPeaks { found: usize, needed: usize },

    #[error("non-positive peak height {value} at t = {t}")]
    NonPositivePeak { t: f64, value: f64 },

    #[error("trajectory does not match the supplied parameters: {0}")]
    MismatchedParameters(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// True for failures that originate in the numerics rather than in the
    /// inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. }
                | Error::NoConvergence { .. }
                | Error::InsufficientPeaks { .. }
                | Error::NonPositivePeak { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
