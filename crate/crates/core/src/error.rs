use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("mode propagates at {freq_hz:.6e} Hz (cutoff {cutoff_hz:.6e} Hz); attenuation undefined")]
    PropagatingMode { freq_hz: f64, cutoff_hz: f64 },

    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("chi ({chi:e}) and detuning ({delta:e}) have opposite signs; g^2 would be negative")]
    SignInconsistency { chi: f64, delta: f64 },

    #[error("zero qubit-resonator detuning")]
    DegenerateDetuning,

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("fit did not converge: {message}")]
    FitFailure { message: String, last_iterate: Vec<f64> },

    #[error("no resonance found: {0}")]
    NoResonance(String),

    #[error("T2 = {t2:e} s exceeds 2*T1 = {two_t1:e} s; pure dephasing is non-physical")]
    NonPhysicalDephasing { t2: f64, two_t1: f64 },

    #[error("incomplete parameter set: {0}")]
    IncompleteSet(String),

    #[error("loss budget has no sources")]
    IncompleteBudget,

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("usage: {0}")]
    Usage(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn parse(line: usize, column: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: msg.into(),
        }
    }

    /// Process exit code for the command-line front end.
    ///
    /// 2 usage, 3 parse (and unreadable input), 4 validation, 5 fit failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::Parse { .. } | Error::UnsupportedFormat(_) | Error::Io { .. } => 3,
            Error::FitFailure { .. } | Error::NoResonance(_) | Error::DegenerateGeometry(_) => 5,
            _ => 4,
        }
    }
}

/// Rejects NaN and infinities with a uniform message.
pub(crate) fn finite(name: &str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::invalid(format!("{name} must be finite, got {value}")))
    }
}

pub(crate) fn positive(name: &str, value: f64) -> Result<f64> {
    finite(name, value)?;
    if value > 0.0 {
        Ok(value)
    } else {
        Err(Error::invalid(format!("{name} must be positive, got {value}")))
    }
}
