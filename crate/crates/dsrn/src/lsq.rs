//! Levenberg-Marquardt for small dense nonlinear least-squares problems
//! with forward-difference Jacobians.

use nalgebra::{DMatrix, DVector};

use crate::error::{DsrnError, Result};

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Convergence: step < tol (1 + |theta|) together with a small gradient.
    pub tol: f64,
    /// Relative forward-difference step.
    pub fd_step: f64,
    pub initial_damping: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self { max_iterations: 200, tol: 1e-10, fd_step: 1e-6, initial_damping: 1e-3 }
    }
}

#[derive(Debug, Clone)]
pub struct LmReport {
    pub theta: Vec<f64>,
    /// sum of squared residuals
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// cost after each iteration
    pub trace: Vec<f64>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Forward-difference Jacobian with step h_j = rel (|theta_j| + floor_j).
pub fn fd_jacobian<F>(f: &F, theta: &[f64], r0: &[f64], rel: f64, floor: &[f64]) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let m = r0.len();
    let mut jac = DMatrix::zeros(m, theta.len());
    for j in 0..theta.len() {
        let h = rel * (theta[j].abs() + floor[j]);
        let mut t = theta.to_vec();
        t[j] += h;
        let h = t[j] - theta[j];
        let r = f(&t)?;
        for i in 0..m {
            jac[(i, j)] = (r[i] - r0[i]) / h;
        }
    }
    Ok(jac)
}

/// Minimize |f(theta)|^2 starting from `theta0`. `floor` sets the absolute
/// part of the difference step for each coordinate. Evaluations that fail
/// count as rejected steps.
pub fn levenberg_marquardt<F>(f: F, theta0: &[f64], floor: &[f64], opts: &LmOptions) -> Result<LmReport>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = theta0.len();
    let mut theta = theta0.to_vec();
    let mut r = f(&theta)?;
    let mut cost: f64 = r.iter().map(|x| x * x).sum();
    let mut trace = Vec::new();
    let mut mu = opts.initial_damping;
    let mut nu = 2.0;
    let mut jac = fd_jacobian(&f, &theta, &r, opts.fd_step, floor)?;
    for iter in 1..=opts.max_iterations {
        if cost == 0.0 {
            return Ok(LmReport { theta, cost, iterations: iter - 1, converged: true, trace });
        }
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * DVector::from_column_slice(&r);
        let mut a = jtj.clone();
        for i in 0..n {
            a[(i, i)] += mu * jtj[(i, i)].max(1e-300);
        }
        let step = a.cholesky().map(|c| c.solve(&(-&g)));
        let step = match step {
            Some(s) if s.iter().all(|x| x.is_finite()) => s,
            _ => {
                mu *= nu;
                nu *= 2.0;
                trace.push(cost);
                continue;
            }
        };
        let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect();
        let small_step = norm(step.as_slice()) <= opts.tol * (1.0 + norm(&theta));
        let outcome = f(&trial).ok().map(|rt| {
            let ct: f64 = rt.iter().map(|x| x * x).sum();
            (rt, ct)
        });
        match outcome {
            Some((rt, ct)) if ct.is_finite() && ct <= cost => {
                // gain ratio against the linear model
                let pred = -(step.dot(&g) * 2.0 + (&jac * &step).norm_squared());
                let rho = if pred > 0.0 { (cost - ct) / pred } else { 0.0 };
                theta = trial;
                r = rt;
                cost = ct;
                mu *= (1.0f64 / 3.0).max(1.0 - (2.0 * rho - 1.0).powi(3));
                nu = 2.0;
                trace.push(cost);
                if small_step {
                    return Ok(LmReport { theta, cost, iterations: iter, converged: true, trace });
                }
                jac = fd_jacobian(&f, &theta, &r, opts.fd_step, floor)?;
            }
            _ => {
                trace.push(cost);
                // the model cannot decrease the cost any further
                if small_step && g.norm() <= opts.tol.sqrt() * (1.0 + cost.sqrt()) {
                    return Ok(LmReport { theta, cost, iterations: iter, converged: true, trace });
                }
                mu *= nu;
                nu *= 2.0;
                if mu > 1e20 {
                    break;
                }
            }
        }
    }
    Err(DsrnError::NonConvergence { iterations: trace.len(), residual: cost.sqrt() })
}
