//! Complex S21 resonance fitting for feedline-coupled ("hanger") resonators.
//!
//! Extraction runs in stages: electrical delay from the off-resonant phase
//! slope, an algebraic circle fit in the complex plane, a fit of the phase
//! roll around the circle center, then a seven-parameter least-squares
//! polish over the raw complex data. Standard errors follow each stage by
//! first-order covariance transport.
//!
//! Internal Q uses the asymmetry-corrected convention
//! `1/Qi = 1/Ql − cos(φ)/|Qc|`.

mod circle;
mod fit;
mod lorentzian;
mod model;
mod phase;
mod synth;

pub use circle::{circle_fit, fit_circle, CircleFit};
pub use fit::{
    fit_batch, fit_hanger, fit_hanger_with, FitDiagnostics, FitOptions, FitResult, ParamErrors, QiConvention,
};
pub use lorentzian::{fit_lorentzian, LorentzianFit};
pub use model::{apply_background, correct_background, estimate_delay, model_s21_hanger, unwrap_phase};
pub use phase::{phase_fit, phase_model, PhaseFit};
pub use synth::{noise_sigma, synthesize_trace};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of samples accepted by the fitters.
pub const MIN_FIT_POINTS: usize = 8;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    /// Average intracavity photon number during the sweep.
    pub photon_number: Option<f64>,
    /// K.
    pub temperature: Option<f64>,
    pub label: String,
}

/// Frequency-ordered complex S21 samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceTrace {
    freqs: Vec<f64>,
    s21: Vec<Complex64>,
    pub meta: TraceMeta,
}

impl ResonanceTrace {
    pub fn new(freqs: Vec<f64>, s21: Vec<Complex64>, meta: TraceMeta) -> Result<Self> {
        if freqs.len() != s21.len() {
            return Err(Error::Validation(format!(
                "{} frequencies but {} S21 samples",
                freqs.len(),
                s21.len()
            )));
        }
        if let Some(i) = freqs.iter().position(|f| !f.is_finite()) {
            return Err(Error::Validation(format!("frequency at index {i} is not finite")));
        }
        if let Some(i) = s21.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Validation(format!("S21 at index {i} is not finite")));
        }
        if let Some(i) = freqs.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Validation(format!(
                "frequencies must be strictly increasing (index {} -> {})",
                i,
                i + 1
            )));
        }
        Ok(Self { freqs, s21, meta })
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn s21(&self) -> &[Complex64] {
        &self.s21
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn span(&self) -> f64 {
        match (self.freqs.first(), self.freqs.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Midpoint of the sweep, used as the phase reference for delay terms.
    pub fn center_frequency(&self) -> f64 {
        match (self.freqs.first(), self.freqs.last()) {
            (Some(a), Some(b)) => 0.5 * (a + b),
            _ => 0.0,
        }
    }

    pub(crate) fn with_s21(&self, s21: Vec<Complex64>) -> Self {
        Self {
            freqs: self.freqs.clone(),
            s21,
            meta: self.meta.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HangerModelParams {
    /// Hz.
    pub f0: f64,
    pub qi: f64,
    /// |Qc|.
    pub qc_mag: f64,
    /// Impedance-asymmetry angle (rad).
    pub phi: f64,
    /// Background amplitude.
    pub amp: f64,
    /// Background phase (rad).
    pub theta0: f64,
    /// Electrical delay (s).
    pub tau: f64,
}

impl HangerModelParams {
    /// Canonical resonator with no background: a = 1, θ0 = 0, τ = 0.
    pub fn canonical(f0: f64, qi: f64, qc_mag: f64, phi: f64) -> Self {
        Self {
            f0,
            qi,
            qc_mag,
            phi,
            amp: 1.0,
            theta0: 0.0,
            tau: 0.0,
        }
    }

    /// 1/Ql = 1/Qi + cos(φ)/|Qc|.
    pub fn loaded_q(&self) -> f64 {
        1.0 / (1.0 / self.qi + self.phi.cos() / self.qc_mag)
    }

    /// Qc_real = |Qc| / cos(φ).
    pub fn qc_real(&self) -> f64 {
        self.qc_mag / self.phi.cos()
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.f0, self.qi, self.phi, self.amp, self.theta0, self.tau]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.qc_mag.is_nan() {
            return Err(Error::invalid("model parameters must be finite (|Qc| may be +inf)"));
        }
        if self.f0 <= 0.0 || self.qi <= 0.0 || self.qc_mag <= 0.0 || self.amp <= 0.0 {
            return Err(Error::invalid("f0, Qi, |Qc| and amplitude must be positive"));
        }
        if self.loaded_q() <= 0.0 {
            return Err(Error::invalid("loaded Q must be positive"));
        }
        Ok(())
    }
}

/// Total quality factor from the harmonic sum 1/Q = 1/Qi + 1/Qc.
///
/// Either input may be `+inf` (an uncoupled or lossless limit).
pub fn combine_q(qi: f64, qc: f64) -> Result<f64> {
    for (name, q) in [("Qi", qi), ("Qc", qc)] {
        if q.is_nan() || q <= 0.0 {
            return Err(Error::invalid(format!("{name} must be positive, got {q}")));
        }
    }
    if qc.is_infinite() {
        return Ok(qi);
    }
    if qi.is_infinite() {
        return Ok(qc);
    }
    Ok(1.0 / (1.0 / qi + 1.0 / qc))
}
