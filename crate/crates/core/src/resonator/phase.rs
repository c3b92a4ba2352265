use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{unwrap_phase, ResonanceTrace};
use crate::error::{Error, Result};
use crate::lsq::{levenberg_marquardt, LeastSquares, LmOptions};

/// θ(f) = θ_off + 2·atan(2·Ql·(1 − f/f0)).
pub fn phase_model(theta_offset: f64, ql: f64, f0: f64, f: f64) -> f64 {
    theta_offset + 2.0 * (2.0 * ql * (1.0 - f / f0)).atan()
}

#[derive(Debug, Clone)]
pub struct PhaseFit {
    pub f0: f64,
    pub ql: f64,
    pub theta_offset: f64,
    /// Standard errors of (f0, Ql, θ_off).
    pub std_errors: [f64; 3],
    /// Covariance of (f0, Ql, θ_off).
    pub covariance: [[f64; 3]; 3],
    pub residual_rms: f64,
    /// Set when consecutive raw angles jump by more than π/2, so the
    /// unwrapping may have picked the wrong branch.
    pub wrap_warning: bool,
    pub rank_deficient: bool,
}

struct PhaseProblem<'a> {
    freqs: &'a [f64],
    theta: &'a [f64],
    f_ref: f64,
}

impl PhaseProblem<'_> {
    // params: [θ_off, Ql, f0 − f_ref]
    fn eval(&self, p: &[f64], i: usize) -> f64 {
        phase_model(p[0], p[1], self.f_ref + p[2], self.freqs[i])
    }
}

impl LeastSquares for PhaseProblem<'_> {
    fn residuals(&self, p: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.freqs.len(),
            (0..self.freqs.len()).map(|i| self.eval(p, i) - self.theta[i]),
        )
    }

    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let (ql, f0) = (p[1], self.f_ref + p[2]);
        let mut j = DMatrix::zeros(self.freqs.len(), 3);
        for (i, &f) in self.freqs.iter().enumerate() {
            let x = 2.0 * ql * (1.0 - f / f0);
            let w = 2.0 / (1.0 + x * x);
            j[(i, 0)] = 1.0;
            j[(i, 1)] = w * 2.0 * (1.0 - f / f0);
            j[(i, 2)] = w * 2.0 * ql * f / (f0 * f0);
        }
        j
    }
}

/// Fits the phase roll of `S21 − center` around the resonance circle.
pub fn phase_fit(trace: &ResonanceTrace, center: Complex64) -> Result<PhaseFit> {
    let raw: Vec<f64> = trace.s21().iter().map(|z| (z - center).arg()).collect();
    let wrap_warning = raw.windows(2).any(|w| {
        let d = (w[1] - w[0] + PI).rem_euclid(2.0 * PI) - PI;
        d.abs() > FRAC_PI_2
    });
    let theta = unwrap_phase(&raw);
    let freqs = trace.freqs();
    let f_ref = trace.center_frequency();
    let (theta0, ql0, f00) = initial_guess(freqs, &theta)?;

    let problem = PhaseProblem {
        freqs,
        theta: &theta,
        f_ref,
    };
    let out = levenberg_marquardt(&problem, &[theta0, ql0, f00 - f_ref], LmOptions::default())?;
    let cov = out.covariance();
    // Reorder to (f0, Ql, θ_off).
    let order = [2, 1, 0];
    let mut covariance = [[0.0; 3]; 3];
    for (a, &i) in order.iter().enumerate() {
        for (b, &j) in order.iter().enumerate() {
            covariance[a][b] = cov[(i, j)];
        }
    }
    let se = |k: usize| covariance[k][k].max(0.0).sqrt();
    Ok(PhaseFit {
        f0: f_ref + out.params[2],
        ql: out.params[1],
        theta_offset: out.params[0],
        std_errors: [se(0), se(1), se(2)],
        covariance,
        residual_rms: (out.cost / theta.len() as f64).sqrt(),
        wrap_warning,
        rank_deficient: out.rank_deficient,
    })
}

/// Midpoint crossing for f0, the ±π/2 crossings (or the local slope) for Ql.
fn initial_guess(freqs: &[f64], theta: &[f64]) -> Result<(f64, f64, f64)> {
    let n = theta.len();
    let mid = 0.5 * (theta[0] + theta[n - 1]);
    let f0 =
        crossing(freqs, theta, mid).ok_or_else(|| Error::NoResonance("phase never crosses its midpoint".into()))?;
    let ql = match (
        crossing(freqs, theta, mid + FRAC_PI_2),
        crossing(freqs, theta, mid - FRAC_PI_2),
    ) {
        (Some(a), Some(b)) if a != b => f0 / (a - b).abs(),
        _ => {
            // dθ/df = −4·Ql/f0 at resonance.
            let i = freqs.partition_point(|&f| f < f0).clamp(1, n - 1);
            let lo = i.saturating_sub(3);
            let hi = (i + 3).min(n);
            let slope = (theta[hi - 1] - theta[lo]) / (freqs[hi - 1] - freqs[lo]);
            (-slope * f0 / 4.0).abs()
        }
    };
    if !(ql > 0.0 && ql.is_finite()) {
        return Err(Error::NoResonance("no usable phase slope".into()));
    }
    Ok((mid, ql, f0))
}

/// First linear-interpolated crossing of `level`, searching outward from the
/// steepest segment.
fn crossing(freqs: &[f64], theta: &[f64], level: f64) -> Option<f64> {
    let steepest = (0..theta.len() - 1)
        .max_by(|&a, &b| {
            let sa = (theta[a + 1] - theta[a]).abs() / (freqs[a + 1] - freqs[a]);
            let sb = (theta[b + 1] - theta[b]).abs() / (freqs[b + 1] - freqs[b]);
            sa.total_cmp(&sb)
        })
        .unwrap_or(0);
    let mut order: Vec<usize> = (0..theta.len() - 1).collect();
    order.sort_by_key(|&i| (i as isize - steepest as isize).unsigned_abs());
    order.into_iter().find_map(|i| {
        let (a, b) = (theta[i] - level, theta[i + 1] - level);
        if a == 0.0 {
            Some(freqs[i])
        } else if a * b < 0.0 {
            Some(freqs[i] + (freqs[i + 1] - freqs[i]) * a / (a - b))
        } else {
            None
        }
    })
}
