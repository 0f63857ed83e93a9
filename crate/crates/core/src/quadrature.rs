//! Legendre-Gauss-Lobatto rules on [-1, 1], barycentric Lagrange evaluation
//! and collocation differentiation matrices.

use nalgebra::DMatrix;

use crate::error::{check_len, HumError, Result};

const NEWTON_STEP_TOL: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 100;

/// Legendre polynomial `L_n(x)` and `L_{n-1}(x)` by the three-term recurrence.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut prev, mut cur) = (1.0, x);
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// Value and derivative of `L_n` at `x`.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (ln, lm) = legendre_pair(n, x);
    let nf = n as f64;
    let deriv = if (x.abs() - 1.0).abs() < f64::EPSILON {
        let s = if x > 0.0 || n % 2 == 1 { 1.0 } else { -1.0 };
        s * nf * (nf + 1.0) / 2.0
    } else {
        nf * (lm - x * ln) / (1.0 - x * x)
    };
    (ln, deriv)
}

/// Residual of `(1-x^2) L_n'(x)`, evaluated without dividing by `1-x^2`.
pub fn lobatto_residual(n: usize, x: f64) -> f64 {
    let (ln, lm) = legendre_pair(n, x);
    n as f64 * (lm - x * ln)
}

/// LGL nodes, weights and barycentric weights of order `N` (N+1 points).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    bary: Vec<f64>,
}

pub fn lgl_rule(order: usize) -> Result<QuadratureRule> {
    QuadratureRule::new(order)
}

impl QuadratureRule {
    pub fn new(order: usize) -> Result<Self> {
        if order < 2 {
            return Err(HumError::InvalidOrder(order));
        }
        let n = order;
        let nf = n as f64;
        let mut nodes = vec![0.0; n + 1];
        nodes[0] = -1.0;
        nodes[n] = 1.0;
        // Left half by Newton on (1-x^2)L_N', then mirrored so the rule is exactly symmetric.
        for j in 1..=(n - 1) / 2 {
            let mut x = -(std::f64::consts::PI * j as f64 / nf).cos();
            let mut converged = false;
            for _ in 0..NEWTON_MAX_ITER {
                let (ln, lm) = legendre_pair(n, x);
                let dx = (lm - x * ln) / ((nf + 1.0) * ln);
                x += dx;
                if dx.abs() <= NEWTON_STEP_TOL * (1.0 + x.abs()) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(HumError::Numerical(format!(
                    "LGL node {j} of order {n} did not converge"
                )));
            }
            nodes[j] = x;
            nodes[n - j] = -x;
        }
        // node 0 is exact for even N, the loop above leaves it at 0.
        if n % 2 == 0 {
            nodes[n / 2] = 0.0;
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(HumError::Numerical(format!(
                "LGL nodes of order {n} are not strictly ascending"
            )));
        }

        let scale = 2.0 / (nf * (nf + 1.0));
        let mut weights = Vec::with_capacity(n + 1);
        let mut bary = Vec::with_capacity(n + 1);
        for &x in &nodes {
            let (ln, _) = legendre_pair(n, x);
            weights.push(scale / (ln * ln));
            bary.push(1.0 / ln);
        }
        for i in 0..=n / 2 {
            let w = 0.5 * (weights[i] + weights[n - i]);
            weights[i] = w;
            weights[n - i] = w;
        }
        Ok(Self {
            order: n,
            nodes,
            weights,
            bary,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.order + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight_first(&self) -> f64 {
        self.weights[0]
    }

    pub fn weight_last(&self) -> f64 {
        self.weights[self.order]
    }

    /// Discrete inner product `sum_i w_i z_i omega_i`.
    pub fn inner(&self, w: &[f64], z: &[f64]) -> Result<f64> {
        check_len(self.len(), w.len())?;
        check_len(self.len(), z.len())?;
        Ok(self.inner_unchecked(w, z))
    }

    pub(crate) fn inner_unchecked(&self, w: &[f64], z: &[f64]) -> f64 {
        w.iter()
            .zip(z)
            .zip(&self.weights)
            .map(|((a, b), om)| a * b * om)
            .sum()
    }

    pub fn norm_sq(&self, w: &[f64]) -> Result<f64> {
        self.inner(w, w)
    }

    /// Cardinal function `Psi_j(x)`.
    pub fn lagrange_eval(&self, j: usize, x: f64) -> Result<f64> {
        if j > self.order {
            return Err(HumError::Dimension {
                expected: self.order,
                got: j,
            });
        }
        let mut e = vec![0.0; self.len()];
        e[j] = 1.0;
        self.interpolate(&e, x)
    }

    /// Evaluates the interpolant of node values at `x` (second barycentric form).
    pub fn interpolate(&self, values: &[f64], x: f64) -> Result<f64> {
        check_len(self.len(), values.len())?;
        if !(-1.0..=1.0).contains(&x) {
            return Err(HumError::Domain {
                what: "x",
                value: x,
                allowed: "[-1, 1]",
            });
        }
        Ok(self.interpolate_unchecked(values, x))
    }

    fn interpolate_unchecked(&self, values: &[f64], x: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for ((&xj, &lj), &vj) in self.nodes.iter().zip(&self.bary).zip(values) {
            let dx = x - xj;
            if dx == 0.0 {
                return vj;
            }
            let t = lj / dx;
            num += t * vj;
            den += t;
        }
        num / den
    }

    /// Rows evaluate the interpolant at each target point.
    pub fn interpolation_matrix(&self, targets: &[f64]) -> Result<DMatrix<f64>> {
        let mut p = DMatrix::zeros(targets.len(), self.len());
        for (r, &x) in targets.iter().enumerate() {
            if !(-1.0..=1.0).contains(&x) {
                return Err(HumError::Domain {
                    what: "x",
                    value: x,
                    allowed: "[-1, 1]",
                });
            }
            if let Some(j) = self.nodes.iter().position(|&xj| xj == x) {
                p[(r, j)] = 1.0;
                continue;
            }
            let terms: Vec<f64> = self
                .nodes
                .iter()
                .zip(&self.bary)
                .map(|(&xj, &lj)| lj / (x - xj))
                .collect();
            let den: f64 = terms.iter().sum();
            for (j, t) in terms.iter().enumerate() {
                p[(r, j)] = t / den;
            }
        }
        Ok(p)
    }
}

pub fn discrete_inner(w: &[f64], z: &[f64], rule: &QuadratureRule) -> Result<f64> {
    rule.inner(w, z)
}

/// Collocation derivative matrices: `d1[(i, j)] = Psi_j'(x_i)`, `d2 = d1 * d1`.
#[derive(Debug, Clone)]
pub struct DiffMatrices {
    d1: DMatrix<f64>,
    d2: DMatrix<f64>,
}

impl DiffMatrices {
    pub fn d1(&self) -> &DMatrix<f64> {
        &self.d1
    }

    pub fn d2(&self) -> &DMatrix<f64> {
        &self.d2
    }

    /// Row `i` of `d1` dotted with node values.
    pub fn d1_row_dot(&self, i: usize, v: &[f64]) -> f64 {
        row_dot(&self.d1, i, v)
    }

    pub fn d2_row_dot(&self, i: usize, v: &[f64]) -> f64 {
        row_dot(&self.d2, i, v)
    }

    pub fn apply_d1(&self, v: &[f64]) -> Vec<f64> {
        (0..self.d1.nrows())
            .map(|i| row_dot(&self.d1, i, v))
            .collect()
    }

    pub fn apply_d2(&self, v: &[f64]) -> Vec<f64> {
        (0..self.d2.nrows())
            .map(|i| row_dot(&self.d2, i, v))
            .collect()
    }
}

fn row_dot(m: &DMatrix<f64>, i: usize, v: &[f64]) -> f64 {
    (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum()
}

pub fn diff_matrices(rule: &QuadratureRule) -> DiffMatrices {
    let n = rule.len();
    let x = rule.nodes();
    let b = &rule.bary;
    let mut d1 = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = (b[j] / b[i]) / (x[i] - x[j]);
                d1[(i, j)] = v;
                diag -= v;
            }
        }
        d1[(i, i)] = diag;
    }
    let d2 = &d1 * &d1;
    DiffMatrices { d1, d2 }
}

/// Gauss-Legendre rule with `n` points on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one point");
    let nf = n as f64;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dl = 1.0;
        for _ in 0..NEWTON_MAX_ITER {
            let (l, d) = legendre(n, x);
            dl = d;
            let dx = l / d;
            x -= dx;
            if dx.abs() <= NEWTON_STEP_TOL {
                dl = legendre(n, x).1;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dl * dl);
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}
