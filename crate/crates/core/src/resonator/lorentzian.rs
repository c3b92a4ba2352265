use nalgebra::{DMatrix, DVector};

use super::{ResonanceTrace, MIN_FIT_POINTS};
use crate::error::{Error, Result};
use crate::lsq::{levenberg_marquardt, LeastSquares, LmOptions};

/// |S21|² ≈ peak / (1 + x²) + offset with x = 2·Ql·(f − f0)/f0.
///
/// The peak is negative for a dip. Only the loaded Q is available from a
/// magnitude fit.
#[derive(Debug, Clone)]
pub struct LorentzianFit {
    pub f0: f64,
    pub ql: f64,
    pub peak: f64,
    pub offset: f64,
    /// Standard errors of (f0, Ql, peak, offset).
    pub std_errors: [f64; 4],
}

struct Problem<'a> {
    freqs: &'a [f64],
    power: &'a [f64],
    f_ref: f64,
}

// params: [peak, offset, Ql, f0 − f_ref]
impl LeastSquares for Problem<'_> {
    fn residuals(&self, p: &[f64]) -> DVector<f64> {
        let f0 = self.f_ref + p[3];
        DVector::from_iterator(
            self.freqs.len(),
            self.freqs.iter().zip(self.power).map(|(&f, &y)| {
                let x = 2.0 * p[2] * (f - f0) / f0;
                p[0] / (1.0 + x * x) + p[1] - y
            }),
        )
    }

    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let f0 = self.f_ref + p[3];
        let mut j = DMatrix::zeros(self.freqs.len(), 4);
        for (i, &f) in self.freqs.iter().enumerate() {
            let x = 2.0 * p[2] * (f - f0) / f0;
            let l = 1.0 / (1.0 + x * x);
            let dl_dx = -2.0 * x * l * l;
            j[(i, 0)] = l;
            j[(i, 1)] = 1.0;
            j[(i, 2)] = p[0] * dl_dx * 2.0 * (f - f0) / f0;
            j[(i, 3)] = p[0] * dl_dx * (-2.0 * p[2] * f / (f0 * f0));
        }
        j
    }
}

pub fn fit_lorentzian(trace: &ResonanceTrace) -> Result<LorentzianFit> {
    if trace.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_POINTS,
            got: trace.len(),
        });
    }
    let freqs = trace.freqs();
    let power: Vec<f64> = trace.s21().iter().map(|z| z.norm_sqr()).collect();
    let n = power.len();
    let baseline = 0.5 * (power[0] + power[n - 1]);
    let extreme = (0..n)
        .max_by(|&a, &b| (power[a] - baseline).abs().total_cmp(&(power[b] - baseline).abs()))
        .unwrap();
    let peak0 = power[extreme] - baseline;
    if peak0 == 0.0 {
        return Err(Error::NoResonance("flat magnitude response".into()));
    }
    let half = baseline + 0.5 * peak0;
    let inside = |i: usize| (power[i] - half) * peak0.signum() > 0.0;
    let mut lo = extreme;
    while lo > 0 && inside(lo - 1) {
        lo -= 1;
    }
    let mut hi = extreme;
    while hi + 1 < n && inside(hi + 1) {
        hi += 1;
    }
    let f0 = freqs[extreme];
    let width = (freqs[hi] - freqs[lo]).max(freqs[1] - freqs[0]);
    let f_ref = trace.center_frequency();
    let problem = Problem {
        freqs,
        power: &power,
        f_ref,
    };
    let out = levenberg_marquardt(
        &problem,
        &[peak0, baseline, f0 / width, f0 - f_ref],
        LmOptions::default(),
    )?;
    let cov = out.covariance();
    let se = |k: usize| cov[(k, k)].max(0.0).sqrt();
    Ok(LorentzianFit {
        f0: f_ref + out.params[3],
        ql: out.params[2].abs(),
        peak: out.params[0],
        offset: out.params[1],
        std_errors: [se(3), se(2), se(0), se(1)],
    })
}
