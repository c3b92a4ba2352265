//! Levenberg–Marquardt for small dense problems.
//!
//! Columns of the Jacobian are normalized before each step (Marquardt
//! scaling) and the damped system is solved through an SVD, so a singular
//! direction is dropped instead of blowing up the step. Dropping one sets
//! `rank_deficient` on the outcome.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub trait LeastSquares {
    fn residuals(&self, params: &[f64]) -> DVector<f64>;
    fn jacobian(&self, params: &[f64]) -> DMatrix<f64>;
}

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop once ‖D·δ‖ ≤ step_tol·‖D·p‖ with D the column norms.
    pub step_tol: f64,
    /// Singular values below `sv_cutoff·σ_max` are treated as zero.
    pub sv_cutoff: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            step_tol: 1e-10,
            sv_cutoff: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    pub residuals: DVector<f64>,
    /// Sum of squared residuals.
    pub cost: f64,
    pub iterations: usize,
    pub rank_deficient: bool,
    /// (JᵀJ)⁺ at the solution; multiply by `residual_variance()` for the
    /// parameter covariance.
    pub normal_inverse: DMatrix<f64>,
}

impl LmOutcome {
    pub fn dof(&self) -> usize {
        self.residuals.len().saturating_sub(self.params.len())
    }

    /// Unbiased residual variance, NaN when there are no spare degrees of freedom.
    pub fn residual_variance(&self) -> f64 {
        match self.dof() {
            0 => f64::NAN,
            dof => self.cost / dof as f64,
        }
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        &self.normal_inverse * self.residual_variance()
    }

    pub fn std_errors(&self) -> Vec<f64> {
        let cov = self.covariance();
        (0..self.params.len()).map(|i| cov[(i, i)].max(0.0).sqrt()).collect()
    }
}

struct Decomposition {
    scale: DVector<f64>,
    u: DMatrix<f64>,
    v: DMatrix<f64>,
    sigma: DVector<f64>,
    rank_deficient: bool,
}

fn decompose(jac: &DMatrix<f64>, sv_cutoff: f64) -> Decomposition {
    let n = jac.ncols();
    let scale = DVector::from_iterator(
        n,
        jac.column_iter().map(|c| {
            let norm = c.norm();
            if norm > 0.0 && norm.is_finite() {
                norm
            } else {
                1.0
            }
        }),
    );
    let mut scaled = jac.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col /= scale[j];
    }
    let svd = scaled.svd(true, true);
    let u = svd.u.expect("requested U");
    let v = svd.v_t.expect("requested Vᵀ").transpose();
    let mut sigma = svd.singular_values;
    let sigma_max = sigma.max();
    let mut rank_deficient = false;
    for s in sigma.iter_mut() {
        if *s <= sigma_max * sv_cutoff || !s.is_finite() {
            *s = 0.0;
            rank_deficient = true;
        }
    }
    Decomposition {
        scale,
        u,
        v,
        sigma,
        rank_deficient,
    }
}

fn normal_inverse(d: &Decomposition) -> DMatrix<f64> {
    let n = d.scale.len();
    let mut out = DMatrix::zeros(n, n);
    for k in 0..d.sigma.len() {
        let s = d.sigma[k];
        if s == 0.0 {
            continue;
        }
        let vk = d.v.column(k);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += vk[i] * vk[j] / (s * s);
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] /= d.scale[i] * d.scale[j];
        }
    }
    out
}

fn sum_sq(r: &DVector<f64>) -> f64 {
    r.iter().map(|x| x * x).sum()
}

pub fn levenberg_marquardt<P: LeastSquares>(problem: &P, initial: &[f64], options: LmOptions) -> Result<LmOutcome> {
    let mut params = initial.to_vec();
    let mut residuals = problem.residuals(&params);
    let mut cost = sum_sq(&residuals);
    if !cost.is_finite() {
        return Err(Error::FitFailure {
            message: "non-finite residuals at the initial guess".into(),
            last_iterate: params,
        });
    }
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_iterations {
        iterations += 1;
        let jac = problem.jacobian(&params);
        let d = decompose(&jac, options.sv_cutoff);
        let sigma_max = d.sigma.max();
        if sigma_max == 0.0 {
            converged = true;
            break;
        }
        let g = d.u.transpose() * &residuals;
        let scaled_norm = params
            .iter()
            .zip(d.scale.iter())
            .map(|(p, s)| (p * s).powi(2))
            .sum::<f64>()
            .sqrt();

        let mut accepted = false;
        let mut step_norm = f64::INFINITY;
        while lambda < 1e16 {
            let damp = lambda * sigma_max * sigma_max;
            let mut coeff = DVector::zeros(d.sigma.len());
            for k in 0..d.sigma.len() {
                let s = d.sigma[k];
                if s > 0.0 {
                    coeff[k] = -s * g[k] / (s * s + damp);
                }
            }
            let scaled_step = &d.v * coeff;
            step_norm = scaled_step.norm();
            let trial: Vec<f64> = params
                .iter()
                .zip(scaled_step.iter().zip(d.scale.iter()))
                .map(|(p, (ds, s))| p + ds / s)
                .collect();
            let trial_res = problem.residuals(&trial);
            let trial_cost = sum_sq(&trial_res);
            if trial_cost.is_finite() && trial_cost <= cost {
                let improved = trial_cost < cost;
                params = trial;
                residuals = trial_res;
                cost = trial_cost;
                lambda = (lambda * 0.1).max(1e-15);
                accepted = improved;
                break;
            }
            lambda *= 10.0;
        }

        if step_norm <= options.step_tol * (scaled_norm + options.step_tol) {
            converged = true;
            break;
        }
        if !accepted {
            // No downhill step at any damping: at the floor set by rounding.
            converged = true;
            break;
        }
    }

    if !converged {
        return Err(Error::FitFailure {
            message: format!("no convergence after {} iterations", options.max_iterations),
            last_iterate: params,
        });
    }

    let d = decompose(&problem.jacobian(&params), options.sv_cutoff);
    Ok(LmOutcome {
        normal_inverse: normal_inverse(&d),
        rank_deficient: d.rank_deficient,
        params,
        residuals,
        cost,
        iterations,
    })
}

/// Central-difference Jacobian, for checking analytic ones in tests.
#[cfg(test)]
pub(crate) fn numeric_jacobian<P: LeastSquares>(problem: &P, params: &[f64], rel_step: f64) -> DMatrix<f64> {
    let r0 = problem.residuals(params);
    let mut jac = DMatrix::zeros(r0.len(), params.len());
    for j in 0..params.len() {
        let h = rel_step * params[j].abs().max(1.0);
        let mut plus = params.to_vec();
        let mut minus = params.to_vec();
        plus[j] += h;
        minus[j] -= h;
        let diff = (problem.residuals(&plus) - problem.residuals(&minus)) / (2.0 * h);
        jac.set_column(j, &diff);
    }
    jac
}
