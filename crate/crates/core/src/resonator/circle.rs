use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::ResonanceTrace;
use crate::error::{Error, Result};
use crate::lsq::{levenberg_marquardt, LeastSquares, LmOptions};

#[derive(Debug, Clone)]
pub struct CircleFit {
    pub center: Complex64,
    pub radius: f64,
    /// Signed geometric residual |z − center| − radius per point.
    pub residuals: Vec<f64>,
    /// Covariance of (Re center, Im center, radius); zero when not estimable.
    pub covariance: [[f64; 3]; 3],
}

impl CircleFit {
    pub fn rms_residual(&self) -> f64 {
        (self.residuals.iter().map(|r| r * r).sum::<f64>() / self.residuals.len() as f64).sqrt()
    }
}

pub fn circle_fit(trace: &ResonanceTrace) -> Result<CircleFit> {
    fit_circle(trace.s21())
}

/// Algebraic (Taubin) circle followed by geometric least-squares refinement.
pub fn fit_circle(points: &[Complex64]) -> Result<CircleFit> {
    let (center, radius) = taubin(points)?;
    let problem = Geometric { points };
    let refined = levenberg_marquardt(
        &problem,
        &[center.re, center.im, radius],
        LmOptions {
            max_iterations: 50,
            ..LmOptions::default()
        },
    );
    let (center, radius, covariance) = match refined {
        Ok(out) if out.params[2] > 0.0 => {
            let cov = if out.dof() > 0 {
                out.covariance()
            } else {
                DMatrix::zeros(3, 3)
            };
            let mut c = [[0.0; 3]; 3];
            for (i, row) in c.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = cov[(i, j)];
                }
            }
            (Complex64::new(out.params[0], out.params[1]), out.params[2], c)
        }
        // Keep the algebraic estimate if the refinement misbehaves.
        _ => (center, radius, [[0.0; 3]; 3]),
    };
    let residuals = points.iter().map(|z| (z - center).norm() - radius).collect();
    Ok(CircleFit {
        center,
        radius,
        residuals,
        covariance,
    })
}

/// Taubin's algebraic fit: the smallest root of the characteristic
/// polynomial of the generalized eigenproblem, found by Newton from zero
/// (Chernov's formulation), on centered coordinates.
pub(crate) fn taubin(points: &[Complex64]) -> Result<(Complex64, f64)> {
    let n = points.len();
    if n < 3 {
        return Err(Error::DegenerateGeometry(format!("circle fit needs 3 points, got {n}")));
    }
    let nf = n as f64;
    let mean = points.iter().sum::<Complex64>() / nf;
    let (mut mxx, mut myy, mut mxy, mut mxz, mut myz, mut mzz) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for p in points {
        let x = p.re - mean.re;
        let y = p.im - mean.im;
        let z = x * x + y * y;
        mxy += x * y;
        mxx += x * x;
        myy += y * y;
        mxz += x * z;
        myz += y * z;
        mzz += z * z;
    }
    mxx /= nf;
    myy /= nf;
    mxy /= nf;
    mxz /= nf;
    myz /= nf;
    mzz /= nf;

    let mz = mxx + myy;
    if mz.is_nan() || mz <= 0.0 {
        return Err(Error::DegenerateGeometry("all points coincide".into()));
    }
    let cov_xy = mxx * myy - mxy * mxy;
    let var_z = mzz - mz * mz;
    let a3 = 4.0 * mz;
    let a2 = -3.0 * mz * mz - mzz;
    let a1 = var_z * mz + 4.0 * cov_xy * mz - mxz * mxz - myz * myz;
    let a0 = mxz * (mxz * myy - myz * mxy) + myz * (myz * mxx - mxz * mxy) - var_z * cov_xy;

    let mut x = 0.0;
    let mut y = a0;
    for _ in 0..100 {
        let dy = a1 + x * (2.0 * a2 + 3.0 * a3 * x);
        let x_new = x - y / dy;
        if x_new == x || !x_new.is_finite() {
            break;
        }
        let y_new = a0 + x_new * (a1 + x_new * (a2 + x_new * a3));
        if y_new.abs() >= y.abs() {
            break;
        }
        x = x_new;
        y = y_new;
    }

    let det = x * x - x * mz + cov_xy;
    if det.abs() <= 1e-12 * mz * mz {
        return Err(Error::DegenerateGeometry("points are collinear".into()));
    }
    let cx = (mxz * (myy - x) - myz * mxy) / det / 2.0;
    let cy = (myz * (mxx - x) - mxz * mxy) / det / 2.0;
    let radius = (cx * cx + cy * cy + mz).sqrt();
    if !radius.is_finite() || radius > 1e8 * mz.sqrt() {
        return Err(Error::DegenerateGeometry(
            "circle radius diverges; points are nearly collinear".into(),
        ));
    }
    Ok((Complex64::new(cx, cy) + mean, radius))
}

struct Geometric<'a> {
    points: &'a [Complex64],
}

impl LeastSquares for Geometric<'_> {
    fn residuals(&self, p: &[f64]) -> DVector<f64> {
        let c = Complex64::new(p[0], p[1]);
        DVector::from_iterator(self.points.len(), self.points.iter().map(|z| (z - c).norm() - p[2]))
    }

    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let c = Complex64::new(p[0], p[1]);
        let mut j = DMatrix::zeros(self.points.len(), 3);
        for (i, z) in self.points.iter().enumerate() {
            let d = z - c;
            let r = d.norm().max(f64::MIN_POSITIVE);
            j[(i, 0)] = -d.re / r;
            j[(i, 1)] = -d.im / r;
            j[(i, 2)] = -1.0;
        }
        j
    }
}
