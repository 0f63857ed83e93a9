//! Controlled collocation wave equation, integrated by modal Duhamel steps.

use crate::adjoint1d::TimeGrid;
use crate::error::{check_len, HumError, Result};
use crate::hum1d::ControlSet;
use crate::operators1d::{ControlShapes, DirichletLaplacian, EigenBasis};
use crate::par;
use crate::quadrature::QuadratureRule;

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardState {
    /// All node values; `u[0] = 0`, `u[N] = f(t)`.
    pub u: Vec<f64>,
    /// Velocity at interior nodes.
    pub v: Vec<f64>,
    pub t: f64,
}

/// One forced oscillator `q'' = -mu^2 q + a + b tau` advanced by `h`.
#[inline]
pub(crate) fn oscillator_step(mu: f64, q: f64, v: f64, a: f64, b: f64, h: f64) -> (f64, f64) {
    let mu2 = mu * mu;
    let r0 = q - a / mu2;
    let r1 = v - b / mu2;
    let (sn, cs) = (mu * h).sin_cos();
    (
        r0 * cs + r1 / mu * sn + (a + b * h) / mu2,
        -r0 * mu * sn + r1 * cs + b / mu2,
    )
}

/// Propagates modal amplitude and velocity through every panel of the grid.
pub(crate) fn propagate_mode(
    mu: f64,
    q0: f64,
    v0: f64,
    forcing: &[f64],
    grid: &TimeGrid,
) -> (Vec<f64>, Vec<f64>) {
    let h = grid.dt();
    let mut qs = Vec::with_capacity(grid.len());
    let mut vs = Vec::with_capacity(grid.len());
    let (mut q, mut v) = (q0, v0);
    qs.push(q);
    vs.push(v);
    for m in 0..grid.steps() {
        let a = forcing[m];
        let b = (forcing[m + 1] - forcing[m]) / h;
        (q, v) = oscillator_step(mu, q, v, a, b, h);
        qs.push(q);
        vs.push(v);
    }
    (qs, vs)
}

/// Modal amplitudes at every grid time.
#[derive(Debug, Clone)]
pub struct ForwardTrajectory {
    grid: TimeGrid,
    amplitudes: Vec<Vec<f64>>,
    velocities: Vec<Vec<f64>>,
    boundary_right: Vec<f64>,
}

impl ForwardTrajectory {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn state(&self, basis: &EigenBasis, m: usize) -> ForwardState {
        let n = basis.order();
        let mut u = vec![0.0; n + 1];
        let mut v_full = vec![0.0; n + 1];
        for (k, phi) in basis.modes().iter().enumerate() {
            let (a, b) = (self.amplitudes[k][m], self.velocities[k][m]);
            for i in 1..n {
                u[i] += a * phi[i];
                v_full[i] += b * phi[i];
            }
        }
        u[n] = self.boundary_right[m];
        ForwardState {
            u,
            v: v_full[1..n].to_vec(),
            t: self.grid.time(m),
        }
    }

    pub fn final_state(&self, basis: &EigenBasis) -> ForwardState {
        self.state(basis, self.grid.steps())
    }
}

pub fn forward_trajectory(
    data: (&[f64], &[f64]),
    controls: &ControlSet,
    basis: &EigenBasis,
    shapes: &ControlShapes,
    op: &DirichletLaplacian,
    grid: &TimeGrid,
) -> Result<ForwardTrajectory> {
    let n = basis.order();
    let (u0, u1) = data;
    check_len(n + 1, u0.len())?;
    check_len(n + 1, u1.len())?;
    check_len(n - 1, op.boundary_right().len())?;
    check_len(n + 1, shapes.g_left.len())?;
    if controls.grid != *grid {
        return Err(HumError::Dimension {
            expected: grid.len(),
            got: controls.grid.len(),
        });
    }
    for v in [&controls.f, &controls.g_r, &controls.g_l] {
        check_len(grid.len(), v.len())?;
    }
    // only interior values enter the system
    let interior = |v: &[f64]| {
        let mut w = v.to_vec();
        w[0] = 0.0;
        w[n] = 0.0;
        w
    };
    let mut col = vec![0.0; n + 1];
    col[1..n].copy_from_slice(op.boundary_right().as_slice());
    let p_f = basis.project(&col)?;
    let p_l = basis.project(&interior(&shapes.g_left))?;
    let p_r = basis.project(&interior(&shapes.g_right))?;
    let q0 = basis.project(&interior(u0))?;
    let v0 = basis.project(&interior(u1))?;

    let mu = basis.frequencies();
    let modal = par::map_indices(basis.count(), |k| {
        let forcing: Vec<f64> = (0..grid.len())
            .map(|m| p_f[k] * controls.f[m] + p_l[k] * controls.g_l[m] + p_r[k] * controls.g_r[m])
            .collect();
        propagate_mode(mu[k], q0[k], v0[k], &forcing, grid)
    });
    let (amplitudes, velocities) = modal.into_iter().unzip();
    Ok(ForwardTrajectory {
        grid: grid.clone(),
        amplitudes,
        velocities,
        boundary_right: controls.f.clone(),
    })
}

pub fn forward_solve(
    data: (&[f64], &[f64]),
    controls: &ControlSet,
    basis: &EigenBasis,
    shapes: &ControlShapes,
    op: &DirichletLaplacian,
    grid: &TimeGrid,
) -> Result<ForwardState> {
    Ok(forward_trajectory(data, controls, basis, shapes, op, grid)?.final_state(basis))
}

/// `sqrt(||u(T)||^2 + ||u_t(T)||^2) / sqrt(||u0||^2 + ||u1||^2)` over interior nodes.
pub fn final_residual(state: &ForwardState, rule: &QuadratureRule, data: (&[f64], &[f64])) -> f64 {
    let n = rule.order();
    let w = &rule.weights()[1..n];
    let sq = |v: &[f64]| -> f64 { v.iter().zip(w).map(|(x, w)| x * x * w).sum() };
    let num = sq(&state.u[1..n]) + sq(&state.v);
    let den = sq(&data.0[1..n]) + sq(&data.1[1..n]);
    num.sqrt() / den.sqrt().max(1e-300)
}

/// `1/2 (||u_t||_N^2 + ||u_x||_N^2)` of a state.
pub fn forward_energy(state: &ForwardState, basis: &EigenBasis) -> f64 {
    let rule = basis.rule();
    let n = rule.order();
    let ux = basis.diff().apply_d1(&state.u);
    let kin: f64 = state
        .v
        .iter()
        .zip(&rule.weights()[1..n])
        .map(|(v, w)| v * v * w)
        .sum();
    0.5 * (kin + rule.inner_unchecked(&ux, &ux))
}
