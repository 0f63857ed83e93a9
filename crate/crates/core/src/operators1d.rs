//! Collocation Dirichlet Laplacian, its eigenbasis and the artificial control shapes.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{check_len, HumError, Result};
use crate::quadrature::{lgl_rule, DiffMatrices, QuadratureRule};

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_SWEEPS: usize = 10_000;

/// Collocation second derivative on interior nodes with homogeneous Dirichlet data.
#[derive(Debug, Clone)]
pub struct DirichletLaplacian {
    rule: QuadratureRule,
    diff: DiffMatrices,
    interior: DMatrix<f64>,
    boundary_left: DVector<f64>,
    boundary_right: DVector<f64>,
    stiffness: DMatrix<f64>,
    weight_diag: Vec<f64>,
}

impl DirichletLaplacian {
    pub fn interior_block(&self) -> &DMatrix<f64> {
        &self.interior
    }

    /// d2 interior rows, column 0.
    pub fn boundary_left(&self) -> &DVector<f64> {
        &self.boundary_left
    }

    /// d2 interior rows, column N.
    pub fn boundary_right(&self) -> &DVector<f64> {
        &self.boundary_right
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    pub fn weight_diag(&self) -> &[f64] {
        &self.weight_diag
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn diff(&self) -> &DiffMatrices {
        &self.diff
    }
}

pub fn assemble_laplacian(rule: &QuadratureRule, diff: &DiffMatrices) -> DirichletLaplacian {
    let n = rule.order();
    let m = n - 1;
    let d1 = diff.d1();
    let d2 = diff.d2();
    let w = rule.weights();
    let interior = DMatrix::from_fn(m, m, |i, j| d2[(i + 1, j + 1)]);
    let boundary_left = DVector::from_fn(m, |i, _| d2[(i + 1, 0)]);
    let boundary_right = DVector::from_fn(m, |i, _| d2[(i + 1, n)]);
    // Exact stiffness: the integrand has degree 2N-2, so the LGL rule is exact.
    let mut stiffness = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let s: f64 = (0..=n)
                .map(|l| w[l] * d1[(l, i + 1)] * d1[(l, j + 1)])
                .sum();
            stiffness[(i, j)] = s;
            stiffness[(j, i)] = s;
        }
    }
    DirichletLaplacian {
        rule: rule.clone(),
        diff: diff.clone(),
        interior,
        boundary_left,
        boundary_right,
        stiffness,
        weight_diag: w[1..n].to_vec(),
    }
}

/// Boundary derivative values of one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeTraces {
    pub dx_right: f64,
    pub dx_left: f64,
    pub dxx_right: f64,
    pub dxx_left: f64,
}

/// Eigenpairs of `K v = lambda W v`, modes stored as full node vectors.
#[derive(Debug, Clone)]
pub struct EigenBasis {
    rule: QuadratureRule,
    diff: DiffMatrices,
    eigenvalues: Vec<f64>,
    frequencies: Vec<f64>,
    modes: Vec<Vec<f64>>,
    traces: Vec<ModeTraces>,
    norms_n: Vec<f64>,
}

/// Orthonormal basis of the interior vectors with `v[m-1-i] = parity * v[i]`.
fn reflection_basis(m: usize, parity: f64) -> DMatrix<f64> {
    let half = m / 2;
    let middle = m % 2 == 1 && parity > 0.0;
    let cols = half + usize::from(middle);
    let mut q = DMatrix::zeros(m, cols);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for c in 0..half {
        q[(c, c)] = r;
        q[(m - 1 - c, c)] = parity * r;
    }
    if middle {
        q[(half, half)] = 1.0;
    }
    q
}

pub fn solve_eigen(op: &DirichletLaplacian, rule: &QuadratureRule) -> Result<EigenBasis> {
    let n = rule.order();
    check_len(n - 1, op.weight_diag.len())?;
    let m = n - 1;
    let w = &op.weight_diag;
    let isqrt: Vec<f64> = w.iter().map(|x| 1.0 / x.sqrt()).collect();
    let scaled = DMatrix::from_fn(m, m, |i, j| op.stiffness[(i, j)] * isqrt[i] * isqrt[j]);

    // The pencil commutes with the reflection x -> -x, so even and odd modes are
    // found separately; this halves the work and makes the parity exact.
    let mut pairs: Vec<(f64, Vec<f64>)> = Vec::with_capacity(m);
    for parity in [1.0, -1.0] {
        let q = reflection_basis(m, parity);
        let block = q.transpose() * &scaled * &q;
        let eig = SymmetricEigen::try_new(block, EIGEN_EPS, EIGEN_MAX_SWEEPS).ok_or_else(|| {
            HumError::Eigen {
                order: n,
                reason: "symmetric QR iteration did not converge".into(),
            }
        })?;
        let vecs = &q * &eig.eigenvectors;
        for (c, &lam) in eig.eigenvalues.iter().enumerate() {
            pairs.push((lam, vecs.column(c).iter().copied().collect()));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let fine = lgl_rule(n + 1)?;
    let interp = rule.interpolation_matrix(fine.nodes())?;
    let diff = &op.diff;

    let mut eigenvalues = Vec::with_capacity(m);
    let mut modes = Vec::with_capacity(m);
    let mut traces = Vec::with_capacity(m);
    let mut norms_n = Vec::with_capacity(m);
    for (k, (lam, vec)) in pairs.into_iter().enumerate() {
        if lam <= 0.0 || !lam.is_finite() {
            return Err(HumError::Eigen {
                order: n,
                reason: format!("eigenvalue {k} is {lam}, expected positive"),
            });
        }
        let mut phi = vec![0.0; n + 1];
        for i in 0..m {
            phi[i + 1] = vec[i] * isqrt[i];
        }
        let vals = &interp * DVector::from_column_slice(&phi);
        let l2: f64 = vals
            .iter()
            .zip(fine.weights())
            .map(|(v, w)| v * v * w)
            .sum::<f64>()
            .sqrt();
        let mut scale = 1.0 / l2;
        if diff.d1_row_dot(0, &phi) < 0.0 {
            scale = -scale;
        }
        phi.iter_mut().for_each(|v| *v *= scale);
        traces.push(ModeTraces {
            dx_right: diff.d1_row_dot(n, &phi),
            dx_left: diff.d1_row_dot(0, &phi),
            dxx_right: diff.d2_row_dot(n, &phi),
            dxx_left: diff.d2_row_dot(0, &phi),
        });
        norms_n.push(rule.inner_unchecked(&phi, &phi));
        eigenvalues.push(lam);
        modes.push(phi);
    }
    if let Some(k) = eigenvalues.windows(2).position(|p| p[1] <= p[0]) {
        return Err(HumError::Eigen {
            order: n,
            reason: format!("eigenvalues {k} and {} are not simple", k + 1),
        });
    }
    let frequencies = eigenvalues.iter().map(|l| l.sqrt()).collect();
    Ok(EigenBasis {
        rule: rule.clone(),
        diff: diff.clone(),
        eigenvalues,
        frequencies,
        modes,
        traces,
        norms_n,
    })
}

impl EigenBasis {
    /// Builds rule, derivative matrices, Laplacian and eigenbasis for order `n`.
    pub fn for_order(n: usize) -> Result<Self> {
        let rule = lgl_rule(n)?;
        let diff = crate::quadrature::diff_matrices(&rule);
        let op = assemble_laplacian(&rule, &diff);
        solve_eigen(&op, &rule)
    }

    pub fn count(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn order(&self) -> usize {
        self.rule.order()
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn diff(&self) -> &DiffMatrices {
        &self.diff
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn mode(&self, k: usize) -> &[f64] {
        &self.modes[k]
    }

    pub fn modes(&self) -> &[Vec<f64>] {
        &self.modes
    }

    pub fn traces(&self) -> &[ModeTraces] {
        &self.traces
    }

    /// `||phi_k||_N^2`.
    pub fn norms_n(&self) -> &[f64] {
        &self.norms_n
    }

    /// `sum_k coeffs[k] phi_k` as node values.
    pub fn synthesize(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        check_len(self.count(), coeffs.len())?;
        let mut out = vec![0.0; self.rule.len()];
        for (c, phi) in coeffs.iter().zip(&self.modes) {
            if *c != 0.0 {
                out.iter_mut().zip(phi).for_each(|(o, p)| *o += c * p);
            }
        }
        Ok(out)
    }

    /// Modal coefficients `(v, phi_k)_N / ||phi_k||_N^2`.
    pub fn project(&self, values: &[f64]) -> Result<Vec<f64>> {
        check_len(self.rule.len(), values.len())?;
        Ok(self
            .modes
            .iter()
            .zip(&self.norms_n)
            .map(|(phi, nk)| self.rule.inner_unchecked(values, phi) / nk)
            .collect())
    }

    /// Unnormalised moments `(v, phi_k)_N`.
    pub fn moments(&self, values: &[f64]) -> Result<Vec<f64>> {
        check_len(self.rule.len(), values.len())?;
        Ok(self
            .modes
            .iter()
            .map(|phi| self.rule.inner_unchecked(values, phi))
            .collect())
    }
}

/// Node values of the artificial control shapes `G` and the helper polynomials `h`.
#[derive(Debug, Clone)]
pub struct ControlShapes {
    pub g_left: Vec<f64>,
    pub g_right: Vec<f64>,
    pub h_left: Vec<f64>,
    pub h_right: Vec<f64>,
}

pub fn control_shapes(rule: &QuadratureRule, diff: &DiffMatrices) -> ControlShapes {
    let n = rule.order();
    let x = rule.nodes();
    let mut h_left = vec![0.0; n + 1];
    let mut h_right = vec![0.0; n + 1];
    for i in 1..n {
        h_left[i] = 0.5 * (1.0 - x[i]);
        h_right[i] = 0.5 * (1.0 + x[i]);
    }
    let hl_xx = diff.apply_d2(&h_left);
    let hr_xx = diff.apply_d2(&h_right);
    let w0 = rule.weight_first();
    let wn = rule.weight_last();
    let d1 = diff.d1();
    let g_right = (0..=n)
        .map(|i| (hr_xx[i] + d1[(i, n)] / wn) / wn.sqrt())
        .collect();
    let g_left = (0..=n)
        .map(|i| (hl_xx[i] - d1[(i, 0)] / w0) / w0.sqrt())
        .collect();
    ControlShapes {
        g_left,
        g_right,
        h_left,
        h_right,
    }
}
