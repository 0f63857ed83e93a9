//! Preconditioned conjugate gradient with restarts on residual drift and
//! Lanczos-based extreme Ritz value estimates.

use nalgebra::DMatrix;

use crate::error::{check_len, HumError, Result};

/// Ritz values are taken from at most this many leading Lanczos steps.
const RITZ_WINDOW: usize = 400;

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// `sqrt(r' P r / b' P b)` for the true residual `r = b - A x`.
    pub relative_residual: f64,
    /// Smallest and largest Ritz values of the preconditioned operator.
    pub ritz_extremes: Option<(f64, f64)>,
}

impl CgOutcome {
    pub fn condition_estimate(&self) -> Option<f64> {
        self.ritz_extremes.map(|(lo, hi)| hi / lo)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn pdot(r: &[f64], p: &[f64]) -> f64 {
    r.iter().zip(p).map(|(x, w)| x * x * w).sum()
}

/// Solves `A x = b` for symmetric positive definite `A`, with diagonal
/// preconditioner `precond` (the inverse diagonal, applied by multiplication).
pub fn preconditioned_cg<F>(
    apply: F,
    precond: &[f64],
    rhs: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<CgOutcome>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = rhs.len();
    check_len(n, precond.len())?;
    let b_norm = pdot(rhs, precond).sqrt();
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            solution: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
            ritz_extremes: None,
        });
    }

    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(precond).map(|(a, w)| a * w).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut alphas = Vec::new();
    let mut betas = Vec::new();
    let mut recording = true;
    let mut iterations = 0;

    let true_residual = |x: &[f64]| -> (Vec<f64>, f64) {
        let ax = apply(x);
        let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let res = pdot(&r, precond).sqrt() / b_norm;
        (r, res)
    };

    while iterations < max_iter {
        let q = apply(&p);
        let pq = dot(&p, &q);
        if pq <= 0.0 || pq.is_nan() {
            return Err(HumError::Numerical(format!(
                "operator is not positive definite (p'Ap = {pq:e} at iteration {iterations})"
            )));
        }
        let alpha = rz / pq;
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut().zip(&q).for_each(|(ri, qi)| *ri -= alpha * qi);
        z.iter_mut()
            .zip(r.iter().zip(precond))
            .for_each(|(zi, (ri, wi))| *zi = ri * wi);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        iterations += 1;
        if recording && alphas.len() < RITZ_WINDOW {
            alphas.push(alpha);
            betas.push(beta);
        }

        if (rz_new.max(0.0)).sqrt() / b_norm <= tol {
            let (r_true, res) = true_residual(&x);
            if res <= tol {
                return Ok(CgOutcome {
                    solution: x,
                    iterations,
                    relative_residual: res,
                    ritz_extremes: ritz_extremes(&alphas, &betas),
                });
            }
            // The recursive residual drifted from the true one: restart.
            recording = false;
            r = r_true;
            z = r.iter().zip(precond).map(|(a, w)| a * w).collect();
            p = z.clone();
            rz = dot(&r, &z);
            continue;
        }
        p.iter_mut()
            .zip(&z)
            .for_each(|(pi, zi)| *pi = zi + beta * *pi);
        rz = rz_new;
    }
    let (_, res) = true_residual(&x);
    Err(HumError::NonConvergence {
        iterations,
        residual: res,
        best: x,
    })
}

fn ritz_extremes(alphas: &[f64], betas: &[f64]) -> Option<(f64, f64)> {
    let k = alphas.len();
    if k == 0 {
        return None;
    }
    let mut t = DMatrix::zeros(k, k);
    for j in 0..k {
        t[(j, j)] = 1.0 / alphas[j]
            + if j > 0 {
                betas[j - 1] / alphas[j - 1]
            } else {
                0.0
            };
        if j + 1 < k {
            let off = betas[j].sqrt() / alphas[j];
            t[(j, j + 1)] = off;
            t[(j + 1, j)] = off;
        }
    }
    let ev = t.symmetric_eigenvalues();
    let lo = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Some((lo, hi))
}
