//! Backwards adjoint system solved exactly mode by mode.

use crate::error::{check_len, HumError, Result};
use crate::operators1d::EigenBasis;
use crate::par;

/// Modal coefficients of the final data: `phi(T) = sum c_k phi_k`, `phi_t(T) = sum d_k phi_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointFinalData {
    pub c: Vec<f64>,
    pub d: Vec<f64>,
}

impl AdjointFinalData {
    pub fn zeros(count: usize) -> Self {
        Self {
            c: vec![0.0; count],
            d: vec![0.0; count],
        }
    }

    pub fn count(&self) -> usize {
        self.c.len()
    }

    /// Flattened as `[c; d]`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.c.clone();
        v.extend_from_slice(&self.d);
        v
    }

    pub fn from_flat(z: &[f64]) -> Result<Self> {
        if z.len() % 2 != 0 {
            return Err(HumError::Dimension {
                expected: z.len() + 1,
                got: z.len(),
            });
        }
        let n = z.len() / 2;
        Ok(Self {
            c: z[..n].to_vec(),
            d: z[n..].to_vec(),
        })
    }

    /// Modal amplitude and its time derivative for mode `k` at offset `s = t - T`.
    #[inline]
    pub fn amplitude(&self, k: usize, mu: f64, s: f64) -> (f64, f64) {
        let (sn, cs) = (mu * s).sin_cos();
        let th = self.c[k] * cs + self.d[k] / mu * sn;
        let dth = -self.c[k] * mu * sn + self.d[k] * cs;
        (th, dth)
    }

    /// Node values of `phi(t)` and `phi_t(t)`.
    pub fn state_at(
        &self,
        basis: &EigenBasis,
        t_final: f64,
        t: f64,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        check_len(basis.count(), self.count())?;
        let s = t - t_final;
        let mut amp = vec![0.0; self.count()];
        let mut vel = vec![0.0; self.count()];
        for (k, &mu) in basis.frequencies().iter().enumerate() {
            let (a, b) = self.amplitude(k, mu, s);
            amp[k] = a;
            vel[k] = b;
        }
        Ok((basis.synthesize(&amp)?, basis.synthesize(&vel)?))
    }
}

/// Uniform sampling of `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    t_final: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t_final: f64, dt: f64) -> Result<Self> {
        if t_final <= 0.0 || !t_final.is_finite() {
            return Err(HumError::Config(format!(
                "final time must be positive, got {t_final}"
            )));
        }
        if dt <= 0.0 || !dt.is_finite() {
            return Err(HumError::Config(format!(
                "time step must be positive, got {dt}"
            )));
        }
        let ratio = t_final / dt;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
            return Err(HumError::Config(format!(
                "final time {t_final} is not an integer multiple of dt = {dt}"
            )));
        }
        let steps = steps as usize;
        if steps < 2 {
            return Err(HumError::Config(format!(
                "need at least 2 time steps, got {steps}"
            )));
        }
        Ok(Self { t_final, steps })
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.steps as f64
    }

    pub fn time(&self, m: usize) -> f64 {
        if m == self.steps {
            self.t_final
        } else {
            self.t_final * m as f64 / self.steps as f64
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|m| self.time(m)).collect()
    }

    /// Trapezoidal `int_0^T v(t)^2 dt` on the grid samples.
    pub fn trapezoid_sq(&self, v: &[f64]) -> f64 {
        let dt = self.dt();
        let n = v.len();
        let inner: f64 = v.iter().map(|x| x * x).sum();
        dt * (inner - 0.5 * (v[0] * v[0] + v[n - 1] * v[n - 1]))
    }

    pub fn l2_norm(&self, v: &[f64]) -> f64 {
        self.trapezoid_sq(v).sqrt()
    }
}

/// The three observed boundary quantities of the adjoint solution.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTraces {
    /// `phi_x(t,1) - omega_N phi_xx(t,1)`.
    pub psi_f: Vec<f64>,
    /// `sqrt(omega_N) phi_xx(t,1)`.
    pub psi_r: Vec<f64>,
    /// `sqrt(omega_0) phi_xx(t,-1)`.
    pub psi_l: Vec<f64>,
}

/// Per-mode trace constants multiplying the modal amplitude in each observation.
#[derive(Debug, Clone)]
pub struct TraceWeights {
    pub f: Vec<f64>,
    pub right: Vec<f64>,
    pub left: Vec<f64>,
}

impl TraceWeights {
    pub fn new(basis: &EigenBasis) -> Self {
        let wn = basis.rule().weight_last();
        let w0 = basis.rule().weight_first();
        let tr = basis.traces();
        Self {
            f: tr.iter().map(|t| t.dx_right - wn * t.dxx_right).collect(),
            right: tr.iter().map(|t| wn.sqrt() * t.dxx_right).collect(),
            left: tr.iter().map(|t| w0.sqrt() * t.dxx_left).collect(),
        }
    }
}

pub fn modal_decompose(phi0: &[f64], phi1: &[f64], basis: &EigenBasis) -> Result<AdjointFinalData> {
    let n = basis.order();
    for v in [phi0, phi1] {
        check_len(n + 1, v.len())?;
        if v[0] != 0.0 || v[n] != 0.0 {
            return Err(HumError::InvalidData(
                "adjoint final data must vanish at the boundary nodes".into(),
            ));
        }
    }
    Ok(AdjointFinalData {
        c: basis.project(phi0)?,
        d: basis.project(phi1)?,
    })
}

pub fn adjoint_traces(
    data: &AdjointFinalData,
    basis: &EigenBasis,
    grid: &TimeGrid,
) -> Result<BoundaryTraces> {
    check_len(basis.count(), data.count())?;
    let tw = TraceWeights::new(basis);
    let mu = basis.frequencies();
    let rows = par::map_indices(grid.len(), |m| {
        let s = grid.time(m) - grid.t_final();
        let (mut f, mut r, mut l) = (0.0, 0.0, 0.0);
        for (k, &mk) in mu.iter().enumerate() {
            let (th, _) = data.amplitude(k, mk, s);
            f += th * tw.f[k];
            r += th * tw.right[k];
            l += th * tw.left[k];
        }
        (f, r, l)
    });
    Ok(BoundaryTraces {
        psi_f: rows.iter().map(|r| r.0).collect(),
        psi_r: rows.iter().map(|r| r.1).collect(),
        psi_l: rows.iter().map(|r| r.2).collect(),
    })
}

/// `1/2 (||phi_t||_N^2 + ||phi_x||_N^2)` at time `t`.
pub fn energy(data: &AdjointFinalData, basis: &EigenBasis, t_final: f64, t: f64) -> Result<f64> {
    let (phi, phi_t) = data.state_at(basis, t_final, t)?;
    let phi_x = basis.diff().apply_d1(&phi);
    let rule = basis.rule();
    Ok(0.5 * (rule.inner_unchecked(&phi_t, &phi_t) + rule.inner_unchecked(&phi_x, &phi_x)))
}
