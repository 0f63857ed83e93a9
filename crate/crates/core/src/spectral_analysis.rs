//! Eigenvalue gaps, boundary observability quotients and log-log fits.

use crate::error::{HumError, Result};
use crate::operators1d::EigenBasis;
use crate::quadrature::QuadratureRule;

/// `(k, sqrt(lambda_{k+1}) - sqrt(lambda_k))` with 1-based `k`.
pub fn gap_scan(basis: &EigenBasis) -> Vec<(usize, f64)> {
    basis
        .frequencies()
        .windows(2)
        .enumerate()
        .map(|(i, w)| (i + 1, w[1] - w[0]))
        .collect()
}

/// Gap `sqrt(lambda_{2k+1}) - sqrt(lambda_{2k})` for the largest pair that fits, 1-based.
pub fn top_pair_gap(basis: &EigenBasis) -> Option<(usize, f64)> {
    let count = basis.count();
    if count < 3 {
        return None;
    }
    let k = (count - 1) / 2;
    let mu = basis.frequencies();
    Some((2 * k, mu[2 * k] - mu[2 * k - 1]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuotientReport {
    pub value: f64,
    /// 1-based mode index attaining the maximum.
    pub argmax: usize,
    /// Set when some denominator vanished and the value is infinite.
    pub degenerate: bool,
}

/// Max over modes of `||phi_x||_N^2` divided by the boundary observation.
pub fn observability_quotient(
    basis: &EigenBasis,
    rule: &QuadratureRule,
    reinforced: bool,
) -> QuotientReport {
    let wn = rule.weight_last();
    let w0 = rule.weight_first();
    let mut best = QuotientReport {
        value: f64::NEG_INFINITY,
        argmax: 0,
        degenerate: false,
    };
    for (k, (phi, tr)) in basis.modes().iter().zip(basis.traces()).enumerate() {
        let phi_x = basis.diff().apply_d1(phi);
        let num = rule.inner_unchecked(&phi_x, &phi_x);
        let mut den = tr.dx_right * tr.dx_right;
        if reinforced {
            den += wn * tr.dxx_right * tr.dxx_right + w0 * tr.dxx_left * tr.dxx_left;
        }
        let q = if den > 0.0 {
            num / den
        } else {
            best.degenerate = true;
            f64::INFINITY
        };
        if q > best.value {
            best.value = q;
            best.argmax = k + 1;
        }
    }
    best
}

/// Quotient of a single mode, 1-based `k`.
pub fn mode_quotient(basis: &EigenBasis, k: usize, reinforced: bool) -> f64 {
    let rule = basis.rule();
    let phi = basis.mode(k - 1);
    let tr = basis.traces()[k - 1];
    let phi_x = basis.diff().apply_d1(phi);
    let num = rule.inner_unchecked(&phi_x, &phi_x);
    let mut den = tr.dx_right * tr.dx_right;
    if reinforced {
        den +=
            rule.weight_last() * tr.dxx_right.powi(2) + rule.weight_first() * tr.dxx_left.powi(2);
    }
    num / den
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
}

/// Least squares of `log(value)` against `log(N)`.
pub fn scaling_fit(samples: &[(f64, f64)]) -> Result<PowerFit> {
    if samples.len() < 3 {
        return Err(HumError::InvalidData(format!(
            "need at least 3 samples for a fit, got {}",
            samples.len()
        )));
    }
    for &(n, v) in samples {
        if n <= 0.0 || n.is_nan() || v <= 0.0 || !v.is_finite() {
            return Err(HumError::Domain {
                what: "sample",
                value: if n > 0.0 { v } else { n },
                allowed: "(0, inf)",
            });
        }
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(n, v)| (n.ln(), v.ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(HumError::InvalidData("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok(PowerFit {
        exponent: slope,
        prefactor: intercept.exp(),
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_power_law() {
        let s: Vec<(f64, f64)> = [4.0, 8.0, 16.0, 32.0]
            .iter()
            .map(|&n| (n, 3.0 * n * n))
            .collect();
        let f = scaling_fit(&s).unwrap();
        assert!((f.exponent - 2.0).abs() < 1e-12);
        assert!((f.prefactor - 3.0).abs() < 1e-12);
    }

    #[test]
    fn fit_rejects_nonpositive() {
        assert!(scaling_fit(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
        assert!(scaling_fit(&[(1.0, 1.0), (2.0, 1.0)]).is_err());
    }
}
