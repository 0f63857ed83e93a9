//! Initial data in the discrete spaces: interpolation, modal truncation, built-in profiles.

use std::f64::consts::FRAC_2_PI;

use nalgebra::DMatrix;

use crate::error::{check_len, HumError, Result};
use crate::operators1d::EigenBasis;
use crate::quadrature::QuadratureRule;

fn zero_boundary(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.len() - 1;
    v[0] = 0.0;
    v[n] = 0.0;
    v
}

fn check_finite(v: &[f64]) -> Result<()> {
    let n = v.len();
    match v[1..n - 1].iter().position(|x| !x.is_finite()) {
        Some(i) => Err(HumError::InvalidData(format!(
            "non-finite value at interior node {}",
            i + 1
        ))),
        None => Ok(()),
    }
}

/// Node values at interior nodes, zero at both ends.
pub fn interpolate_data<F, G>(u0: F, u1: G, rule: &QuadratureRule) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let x = rule.nodes();
    let n = rule.order();
    let eval = |f: &dyn Fn(f64) -> f64| -> Vec<f64> {
        (0..=n)
            .map(|i| if i == 0 || i == n { 0.0 } else { f(x[i]) })
            .collect()
    };
    let (a, b) = (eval(&u0), eval(&u1));
    check_finite(&a)?;
    check_finite(&b)?;
    Ok((a, b))
}

/// Same as [`interpolate_data`] for already sampled node values.
pub fn interpolate_samples(
    u0: &[f64],
    u1: &[f64],
    rule: &QuadratureRule,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_len(rule.len(), u0.len())?;
    check_len(rule.len(), u1.len())?;
    check_finite(u0)?;
    check_finite(u1)?;
    Ok((zero_boundary(u0.to_vec()), zero_boundary(u1.to_vec())))
}

/// Number of retained modes, `max(1, floor(alpha N^(1/8)))`.
pub fn retained_modes(order: usize, alpha: f64) -> usize {
    ((alpha * (order as f64).powf(0.125)).floor() as usize).max(1)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < FRAC_2_PI {
        Ok(())
    } else {
        Err(HumError::Domain {
            what: "alpha",
            value: alpha,
            allowed: "(0, 2/pi)",
        })
    }
}

/// Keeps the first `r(N)` modes of each component.
pub fn truncated_projection(
    u0: &[f64],
    u1: &[f64],
    basis: &EigenBasis,
    alpha: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_alpha(alpha)?;
    truncated_projection_rank(u0, u1, basis, retained_modes(basis.order(), alpha))
}

/// Keeps the first `rank` modes (clamped to the basis size).
pub fn truncated_projection_rank(
    u0: &[f64],
    u1: &[f64],
    basis: &EigenBasis,
    rank: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (u0, u1) = interpolate_samples(u0, u1, basis.rule())?;
    let keep = rank.min(basis.count());
    let cut = |v: &[f64]| -> Result<Vec<f64>> {
        let mut c = basis.project(v)?;
        c[keep..].iter_mut().for_each(|x| *x = 0.0);
        basis.synthesize(&c)
    };
    Ok((cut(&u0)?, cut(&u1)?))
}

/// `(sum_k (b_k / mu_k)^2)^(1/2)` for modal coefficients `b`.
pub fn h_minus1_norm(coeffs: &[f64], basis: &EigenBasis) -> Result<f64> {
    if coeffs.len() > basis.count() {
        return Err(HumError::Dimension {
            expected: basis.count(),
            got: coeffs.len(),
        });
    }
    Ok(coeffs
        .iter()
        .zip(basis.frequencies())
        .map(|(b, mu)| (b / mu).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// Named initial conditions used by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinData {
    /// `u0 = exp(-10 x^2)`, `u1 = -20 x exp(-10 x^2)`.
    GaussianBump,
    /// `u0 = min(1 - x, 1 + x)`, `u1 = 0`.
    Hat,
    /// `u0 = exp(-10 (x1^2 + x2^2))`, `u1 = 400 x1 x2 exp(-10 (x1^2 + x2^2))`.
    Gaussian2d,
}

impl BuiltinData {
    pub fn name(self) -> &'static str {
        match self {
            BuiltinData::GaussianBump => "gaussian-bump",
            BuiltinData::Hat => "hat",
            BuiltinData::Gaussian2d => "gaussian-2d",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "gaussian-bump" => Ok(BuiltinData::GaussianBump),
            "hat" => Ok(BuiltinData::Hat),
            "gaussian-2d" => Ok(BuiltinData::Gaussian2d),
            other => Err(HumError::Config(format!("unknown data set '{other}'"))),
        }
    }

    /// Interpolated 1-d node data.
    pub fn nodes_1d(self, rule: &QuadratureRule) -> Result<(Vec<f64>, Vec<f64>)> {
        match self {
            BuiltinData::GaussianBump => interpolate_data(
                |x| (-10.0 * x * x).exp(),
                |x| -20.0 * x * (-10.0 * x * x).exp(),
                rule,
            ),
            BuiltinData::Hat => interpolate_data(|x| (1.0 - x).min(1.0 + x), |_| 0.0, rule),
            BuiltinData::Gaussian2d => Err(HumError::Config(
                "gaussian-2d is a two-dimensional data set".into(),
            )),
        }
    }

    /// Interpolated 2-d node arrays.
    pub fn nodes_2d(
        self,
        rule_x1: &QuadratureRule,
        rule_x2: &QuadratureRule,
    ) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        match self {
            BuiltinData::Gaussian2d => Ok(interpolate_data_2d(
                |x, y| (-10.0 * (x * x + y * y)).exp(),
                |x, y| 400.0 * x * y * (-10.0 * (x * x + y * y)).exp(),
                rule_x1,
                rule_x2,
            )?),
            _ => Err(HumError::Config(format!(
                "{} is a one-dimensional data set",
                self.name()
            ))),
        }
    }
}

pub fn interpolate_data_2d<F, G>(
    u0: F,
    u1: G,
    rule_x1: &QuadratureRule,
    rule_x2: &QuadratureRule,
) -> Result<(DMatrix<f64>, DMatrix<f64>)>
where
    F: Fn(f64, f64) -> f64,
    G: Fn(f64, f64) -> f64,
{
    let (x, y) = (rule_x1.nodes(), rule_x2.nodes());
    let (n1, n2) = (rule_x1.order(), rule_x2.order());
    let eval = |f: &dyn Fn(f64, f64) -> f64| -> DMatrix<f64> {
        DMatrix::from_fn(n1 + 1, n2 + 1, |a, b| {
            if a == 0 || b == 0 || a == n1 || b == n2 {
                0.0
            } else {
                f(x[a], y[b])
            }
        })
    };
    let (a, b) = (eval(&u0), eval(&u1));
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(HumError::InvalidData("non-finite 2-d sample".into()));
    }
    Ok((a, b))
}
