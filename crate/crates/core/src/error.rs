use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The large-detuning model behind the effective potential does not hold.
    #[error("detuning {detuning:e} rad/s is below 10x the Rabi frequency {rabi:e} rad/s")]
    DetuningTooSmall { rabi: f64, detuning: f64 },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("noise level `{field}` = {value} outside {bound}")]
    InvalidNoiseLevel {
        field: &'static str,
        value: f64,
        bound: &'static str,
    },

    #[error("free-evolution interval {index} is {value} (pulse ordering violated)")]
    IntervalNonPositive { index: usize, value: f64 },

    #[error("momentum cutoff {cutoff} insufficient: tail mass {tail_mass:e} beyond |n| > {edge}")]
    CutoffInsufficient {
        cutoff: usize,
        edge: usize,
        tail_mass: f64,
    },

    #[error("epsilon is zero and the resonant limit was not requested")]
    EpsilonZero,

    #[error("no closed-form resonance height for amplitude noise level {0} (only 0 and 2)")]
    UnsupportedNoiseLevel(f64),

    #[error("configuration error in {field}: {reason}")]
    Config { field: String, reason: String },

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad user input rather than by a failed run.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::Io { .. } | Error::CutoffInsufficient { .. } | Error::Json(_)
        )
    }
}
