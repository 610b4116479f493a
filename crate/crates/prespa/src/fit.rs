//! Small dense Levenberg–Marquardt solver shared by the curve fits.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Relative step for the central-difference Jacobian.
    pub diff_step: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iterations: 200, tolerance: 1e-14, diff_step: 1e-6 }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: Vec<f64>,
    /// Root-mean-square residual at the solution.
    pub rms: f64,
    pub iterations: usize,
}

pub fn levenberg_marquardt<F>(residual: F, p0: &[f64], opts: &FitOptions) -> Result<FitResult>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let np = p0.len();
    let mut p = p0.to_vec();
    let mut r = DVector::from_vec(residual(&p));
    let m = r.len();
    if m < np {
        return Err(Error::InvalidInput(format!("{m} residuals cannot determine {np} parameters")));
    }
    let mut cost = r.norm_squared();
    if !cost.is_finite() {
        return Err(Error::Fit { residual: f64::INFINITY });
    }
    let mut lambda = 1e-3;
    let mut iterations = 0;
    for it in 0..opts.max_iterations {
        iterations = it + 1;
        let mut jac = DMatrix::<f64>::zeros(m, np);
        for k in 0..np {
            let h = opts.diff_step * p[k].abs().max(1e-3);
            let mut pp = p.clone();
            pp[k] += h;
            let rp = residual(&pp);
            pp[k] = p[k] - h;
            let rm = residual(&pp);
            for i in 0..m {
                jac[(i, k)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &r;
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for k in 0..np {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(step) = a.lu().solve(&(-&jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let rt = DVector::from_vec(residual(&trial));
            let ct = rt.norm_squared();
            if ct.is_finite() && ct < cost {
                let rel = (cost - ct) / cost.max(1e-300);
                let step_small = step.norm() <= opts.tolerance.sqrt() * (1.0 + DVector::from_vec(p.clone()).norm());
                p = trial;
                r = rt;
                cost = ct;
                lambda = (lambda / 3.0).max(1e-12);
                improved = true;
                if rel < opts.tolerance || step_small {
                    return Ok(FitResult { params: p, rms: (cost / m as f64).sqrt(), iterations });
                }
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            break;
        }
    }
    Ok(FitResult { params: p, rms: (cost / m as f64).sqrt(), iterations })
}
