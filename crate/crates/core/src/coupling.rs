//! Exponential coupling laws through below-cutoff waveguide sections.
//!
//! Field amplitude decays as `e^{-αz}` and coupling energy as its square, so
//! the external quality factor grows as `e^{+2αd}` with pin recess and the
//! effective qubit–resonator coupling falls as `e^{-αz}` with separation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{finite, positive, Error, Result};
use crate::lsq::{levenberg_marquardt, LeastSquares, LmOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeriesKind {
    QcVsDepth,
    GVsSeparation,
}

impl SeriesKind {
    /// Sign the fitted rate should carry for this kind of series.
    pub fn expected_rate_sign(self) -> f64 {
        match self {
            SeriesKind::QcVsDepth => 1.0,
            SeriesKind::GVsSeparation => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSeries {
    points: Vec<(f64, f64)>,
    kind: SeriesKind,
}

impl CouplingSeries {
    /// `points` are (distance in m, positive value) pairs.
    pub fn new(points: Vec<(f64, f64)>, kind: SeriesKind) -> Result<Self> {
        for (i, &(d, v)) in points.iter().enumerate() {
            finite(&format!("distance[{i}]"), d)?;
            positive(&format!("value[{i}]"), v)?;
        }
        Ok(Self { points, kind })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn kind(&self) -> SeriesKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `value = amplitude · exp(rate · distance)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialLaw {
    pub amplitude: f64,
    /// Np/m.
    pub rate: f64,
    pub amplitude_std_err: f64,
    pub rate_std_err: f64,
    /// RMS of ln(value) residuals.
    pub log_residual_rms: f64,
    pub dof: usize,
    pub rate_fixed: bool,
}

impl ExponentialLaw {
    pub fn predict(&self, distance: f64) -> f64 {
        self.amplitude * (self.rate * distance).exp()
    }

    /// Whether the fitted rate sign matches the physics of `kind`.
    pub fn sign_consistent(&self, kind: SeriesKind) -> bool {
        self.rate * kind.expected_rate_sign() > 0.0
    }
}

/// Qc at recess `d`, given Qc = `qc_ref` at `d_ref` and field decay `alpha` (Np/m).
pub fn predict_qc(qc_ref: f64, d_ref: f64, d: f64, alpha: f64) -> Result<f64> {
    positive("qc_ref", qc_ref)?;
    positive("alpha", alpha)?;
    finite("d_ref", d_ref)?;
    finite("d", d)?;
    Ok(qc_ref * (2.0 * alpha * (d - d_ref)).exp())
}

/// Log-linear least squares of ln(value) against distance.
///
/// With `fixed_rate` only the amplitude is estimated, as the geometric mean
/// of `value·exp(-rate·distance)`.
pub fn fit_exponential(series: &CouplingSeries, fixed_rate: Option<f64>) -> Result<ExponentialLaw> {
    let n = series.len();
    let xs: Vec<f64> = series.points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = series.points.iter().map(|p| p.1.ln()).collect();

    if let Some(rate) = fixed_rate {
        finite("fixed rate", rate)?;
        if n < 1 {
            return Err(Error::InsufficientData { needed: 1, got: n });
        }
        let shifted: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - rate * x).collect();
        let log_amp = shifted.iter().sum::<f64>() / n as f64;
        let ssr: f64 = shifted.iter().map(|s| (s - log_amp).powi(2)).sum();
        let dof = n - 1;
        let log_amp_se = if dof == 0 {
            f64::NAN
        } else {
            (ssr / dof as f64 / n as f64).sqrt()
        };
        let amplitude = log_amp.exp();
        return Ok(ExponentialLaw {
            amplitude,
            rate,
            amplitude_std_err: amplitude * log_amp_se,
            rate_std_err: 0.0,
            log_residual_rms: (ssr / n as f64).sqrt(),
            dof,
            rate_fixed: true,
        });
    }

    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let x_mean = xs.iter().sum::<f64>() / n as f64;
    let y_mean = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("all distances are equal; rate is undetermined"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - x_mean) * (y - y_mean)).sum();
    let rate = sxy / sxx;
    let intercept = y_mean - rate * x_mean;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - rate * x).powi(2))
        .sum();
    let dof = n - 2;
    let (intercept_se, rate_se) = if dof == 0 {
        (f64::NAN, f64::NAN)
    } else {
        let s2 = ssr / dof as f64;
        let sum_x2: f64 = xs.iter().map(|x| x * x).sum();
        ((s2 * sum_x2 / (n as f64 * sxx)).sqrt(), (s2 / sxx).sqrt())
    };
    let amplitude = intercept.exp();
    Ok(ExponentialLaw {
        amplitude,
        rate,
        amplitude_std_err: amplitude * intercept_se,
        rate_std_err: rate_se,
        log_residual_rms: (ssr / n as f64).sqrt(),
        dof,
        rate_fixed: false,
    })
}

struct LinearSpace<'a> {
    points: &'a [(f64, f64)],
    x_ref: f64,
}

impl LeastSquares for LinearSpace<'_> {
    // params: [amplitude at x_ref, rate]
    fn residuals(&self, p: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.points.len(),
            self.points
                .iter()
                .map(|&(x, y)| p[0] * (p[1] * (x - self.x_ref)).exp() - y),
        )
    }

    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.points.len(), 2);
        for (i, &(x, _)) in self.points.iter().enumerate() {
            let e = (p[1] * (x - self.x_ref)).exp();
            j[(i, 0)] = e;
            j[(i, 1)] = p[0] * (x - self.x_ref) * e;
        }
        j
    }
}

/// Unweighted least squares in linear space, started from the log-space fit.
///
/// Large values dominate this fit; it is offered for data spanning a narrow
/// range, where additive rather than multiplicative noise is the better model.
pub fn refine_linear(series: &CouplingSeries, start: &ExponentialLaw) -> Result<ExponentialLaw> {
    let n = series.len();
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    let x_ref = series.points.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let problem = LinearSpace {
        points: &series.points,
        x_ref,
    };
    let out = levenberg_marquardt(&problem, &[start.predict(x_ref), start.rate], LmOptions::default())?;
    let cov = out.covariance();
    let (a_ref, rate) = (out.params[0], out.params[1]);
    let amplitude = a_ref * (-rate * x_ref).exp();
    // amplitude = a_ref·exp(-rate·x_ref): first-order transport.
    let grad = [amplitude / a_ref, -x_ref * amplitude];
    let var_amp =
        grad[0] * grad[0] * cov[(0, 0)] + 2.0 * grad[0] * grad[1] * cov[(0, 1)] + grad[1] * grad[1] * cov[(1, 1)];
    let log_rms = (series
        .points
        .iter()
        .map(|&(x, y)| (y.ln() - amplitude.ln() - rate * x).powi(2))
        .sum::<f64>()
        / n as f64)
        .sqrt();
    Ok(ExponentialLaw {
        amplitude,
        rate,
        amplitude_std_err: var_amp.max(0.0).sqrt(),
        rate_std_err: cov[(1, 1)].max(0.0).sqrt(),
        log_residual_rms: log_rms,
        dof: out.dof(),
        rate_fixed: false,
    })
}

/// Effective coupling g from χ = 2g²/Δ (all in Hz, ordinary frequency).
pub fn g_from_chi(chi: f64, delta: f64) -> Result<f64> {
    finite("chi", chi)?;
    finite("delta", delta)?;
    if delta == 0.0 {
        return Err(Error::DegenerateDetuning);
    }
    if chi * delta <= 0.0 {
        return Err(Error::SignInconsistency { chi, delta });
    }
    Ok((chi * delta / 2.0).sqrt())
}

pub fn chi_from_g(g: f64, delta: f64) -> Result<f64> {
    finite("g", g)?;
    finite("delta", delta)?;
    if delta == 0.0 {
        return Err(Error::DegenerateDetuning);
    }
    Ok(2.0 * g * g / delta)
}
