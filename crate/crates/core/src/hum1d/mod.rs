//! Minimisation of the discrete HUM functional and extraction of the controls.

mod gramian;
mod integrals;
mod weight;

pub use gramian::{energy_preconditioner, gramian_apply, jacobi, Gramian1d};
pub use integrals::{weighted_exponential, ModePairIntegrals};
pub use weight::WeightFunction;

use crate::adjoint1d::{adjoint_traces, AdjointFinalData, TimeGrid};
use crate::cg::preconditioned_cg;
use crate::error::{check_len, HumError, Result};
use crate::operators1d::EigenBasis;
use crate::quadrature::QuadratureRule;

/// Time samples of the boundary control `f` and the two artificial controls.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSet {
    pub grid: TimeGrid,
    pub f: Vec<f64>,
    pub g_r: Vec<f64>,
    pub g_l: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlNorms {
    pub f: f64,
    pub g_r: f64,
    pub g_l: f64,
}

impl ControlSet {
    pub fn zeros(grid: &TimeGrid) -> Self {
        let m = grid.len();
        Self {
            grid: grid.clone(),
            f: vec![0.0; m],
            g_r: vec![0.0; m],
            g_l: vec![0.0; m],
        }
    }

    /// Trapezoidal `L^2(0,T)` norms on the sample grid.
    pub fn norms(&self) -> ControlNorms {
        ControlNorms {
            f: self.grid.l2_norm(&self.f),
            g_r: self.grid.l2_norm(&self.g_r),
            g_l: self.grid.l2_norm(&self.g_l),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HumSolution {
    pub minimizer: AdjointFinalData,
    pub controls: ControlSet,
    pub functional_value: f64,
    pub cg_iterations: usize,
    pub cg_residual: f64,
    pub gramian_condition_estimate: Option<f64>,
    pub forward_residual: Option<f64>,
}

/// `(u1, phi(0))_N - (u0, phi_t(0))_N`.
pub fn duality_pair(
    phi_state_at_0: (&[f64], &[f64]),
    data: (&[f64], &[f64]),
    rule: &QuadratureRule,
) -> Result<f64> {
    let (phi, phi_t) = phi_state_at_0;
    let (u0, u1) = data;
    Ok(rule.inner(u1, phi)? - rule.inner(u0, phi_t)?)
}

fn check_data(u: &[f64], rule: &QuadratureRule) -> Result<()> {
    check_len(rule.len(), u.len())?;
    if u.iter().any(|v| !v.is_finite()) {
        return Err(HumError::InvalidData("non-finite initial data".into()));
    }
    if u[0] != 0.0 || u[rule.order()] != 0.0 {
        return Err(HumError::InvalidData(
            "initial data must vanish at the boundary nodes".into(),
        ));
    }
    Ok(())
}

/// Pairing of every basis final datum's `t = 0` state with `(u0, u1)`, in `[c; d]` order.
pub fn rhs_vector(u0: &[f64], u1: &[f64], basis: &EigenBasis, t_final: f64) -> Result<Vec<f64>> {
    let m0 = basis.moments(u0)?;
    let m1 = basis.moments(u1)?;
    let n = basis.count();
    let mut b = vec![0.0; 2 * n];
    for (k, &mu) in basis.frequencies().iter().enumerate() {
        let (sn, cs) = (mu * t_final).sin_cos();
        // cosine datum: phi(0) = cos(mu T), phi_t(0) = mu sin(mu T)
        b[k] = cs * m1[k] - mu * sn * m0[k];
        // sine datum: phi(0) = -sin(mu T) / mu, phi_t(0) = cos(mu T)
        b[n + k] = -sn / mu * m1[k] - cs * m0[k];
    }
    Ok(b)
}

/// Reusable solver for one basis and cutoff.
#[derive(Debug, Clone)]
pub struct HumSolver<'a> {
    basis: &'a EigenBasis,
    weight: WeightFunction,
    gramian: Gramian1d,
}

impl<'a> HumSolver<'a> {
    pub fn new(basis: &'a EigenBasis, weight: WeightFunction) -> Self {
        let threshold = 4.0 * (2.0 + 1.0 / basis.order() as f64);
        if weight.t_final() <= threshold {
            log::warn!(
                "T = {} is below the uniform observability time {threshold:.4}",
                weight.t_final()
            );
        }
        Self {
            basis,
            weight,
            gramian: Gramian1d::new(basis, &weight),
        }
    }

    pub fn gramian(&self) -> &Gramian1d {
        &self.gramian
    }

    pub fn weight(&self) -> &WeightFunction {
        &self.weight
    }

    pub fn basis(&self) -> &EigenBasis {
        self.basis
    }

    pub fn solve(
        &self,
        u0: &[f64],
        u1: &[f64],
        grid: &TimeGrid,
        tol: f64,
        max_iter: usize,
    ) -> Result<HumSolution> {
        let rule = self.basis.rule();
        check_data(u0, rule)?;
        check_data(u1, rule)?;
        if (grid.t_final() - self.weight.t_final()).abs() > 1e-12 * grid.t_final() {
            return Err(HumError::Config(format!(
                "time grid ends at {} but the cutoff at {}",
                grid.t_final(),
                self.weight.t_final()
            )));
        }
        let b = rhs_vector(u0, u1, self.basis, self.weight.t_final())?;
        let outcome = preconditioned_cg(
            |z| self.gramian.apply_flat(z),
            self.gramian.preconditioner(),
            &b,
            tol,
            max_iter,
        )?;
        let minimizer = AdjointFinalData::from_flat(&outcome.solution)?;
        let functional_value = -0.5
            * outcome
                .solution
                .iter()
                .zip(&b)
                .map(|(x, y)| x * y)
                .sum::<f64>();
        let controls = extract_controls(&minimizer, &self.weight, grid, self.basis)?;
        Ok(HumSolution {
            minimizer,
            controls,
            functional_value,
            cg_iterations: outcome.iterations,
            cg_residual: outcome.relative_residual,
            gramian_condition_estimate: outcome.condition_estimate(),
            forward_residual: None,
        })
    }

    pub fn functional(&self, z: &AdjointFinalData, u0: &[f64], u1: &[f64]) -> Result<f64> {
        evaluate_functional(
            z,
            (u0, u1),
            &self.gramian,
            self.basis,
            self.weight.t_final(),
        )
    }
}

pub fn solve_hum(
    data: (&[f64], &[f64]),
    basis: &EigenBasis,
    w: &WeightFunction,
    grid: &TimeGrid,
    tol: f64,
    max_iter: usize,
) -> Result<HumSolution> {
    HumSolver::new(basis, *w).solve(data.0, data.1, grid, tol, max_iter)
}

pub fn extract_controls(
    minimizer: &AdjointFinalData,
    w: &WeightFunction,
    grid: &TimeGrid,
    basis: &EigenBasis,
) -> Result<ControlSet> {
    let tr = adjoint_traces(minimizer, basis, grid)?;
    let eta = w.samples(&grid.times());
    let mul = |v: Vec<f64>| -> Vec<f64> { v.iter().zip(&eta).map(|(a, e)| a * e).collect() };
    Ok(ControlSet {
        grid: grid.clone(),
        f: mul(tr.psi_f),
        g_r: mul(tr.psi_r),
        g_l: mul(tr.psi_l),
    })
}

/// `J(z) = 1/2 (L z, z) - <(u0, u1), (phi(0), phi_t(0))>`.
pub fn evaluate_functional(
    z: &AdjointFinalData,
    data: (&[f64], &[f64]),
    gramian: &Gramian1d,
    basis: &EigenBasis,
    t_final: f64,
) -> Result<f64> {
    let flat = z.to_flat();
    check_len(gramian.dim(), flat.len())?;
    let (phi, phi_t) = z.state_at(basis, t_final, 0.0)?;
    let pairing = duality_pair((&phi, &phi_t), data, basis.rule())?;
    Ok(0.5 * gramian.quadratic_form(&flat) - pairing)
}
