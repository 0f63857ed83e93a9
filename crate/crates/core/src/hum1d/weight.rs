use crate::error::{HumError, Result};

/// Quintic smoothstep `6u^5 - 15u^4 + 10u^3`, coefficients by ascending power.
pub(crate) const RISE: [f64; 6] = [0.0, 0.0, 0.0, 10.0, -15.0, 6.0];
/// `1 - smoothstep(u)`.
pub(crate) const FALL: [f64; 6] = [1.0, 0.0, 0.0, -10.0, 15.0, -6.0];

/// Time cutoff: 0 on `[0, d]` and `[T-d, T]`, 1 on `[2d, T-2d]`, smoothstep in between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightFunction {
    t_final: f64,
    delta: f64,
}

/// One transition band: `eta(start + delta * u) = sum coeffs[j] u^j` for `u` in `[0, 1]`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Band {
    pub start: f64,
    pub coeffs: [f64; 6],
}

pub(crate) fn poly_eval(c: &[f64], u: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * u + a)
}

impl WeightFunction {
    pub fn new(t_final: f64, delta: f64) -> Result<Self> {
        if t_final <= 0.0 || !t_final.is_finite() {
            return Err(HumError::Config(format!(
                "final time must be positive, got {t_final}"
            )));
        }
        if delta <= 0.0 || delta.is_nan() || 4.0 * delta >= t_final {
            return Err(HumError::Config(format!(
                "cutoff width {delta} must satisfy 0 < 4*delta < T = {t_final}"
            )));
        }
        Ok(Self { t_final, delta })
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eta(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.t_final).contains(&t) {
            return Err(HumError::Domain {
                what: "t",
                value: t,
                allowed: "[0, T]",
            });
        }
        Ok(self.value(t))
    }

    /// Same as [`eta`](Self::eta) without the range check; clamps outside `[0, T]`.
    pub fn value(&self, t: f64) -> f64 {
        let (d, tf) = (self.delta, self.t_final);
        if t <= d || t >= tf - d {
            0.0
        } else if t < 2.0 * d {
            poly_eval(&RISE, (t - d) / d)
        } else if t > tf - 2.0 * d {
            poly_eval(&FALL, (t - (tf - 2.0 * d)) / d)
        } else {
            1.0
        }
    }

    pub(crate) fn bands(&self) -> [Band; 2] {
        [
            Band {
                start: self.delta,
                coeffs: RISE,
            },
            Band {
                start: self.t_final - 2.0 * self.delta,
                coeffs: FALL,
            },
        ]
    }

    /// Breakpoints of the piecewise polynomial profile.
    pub fn breakpoints(&self) -> [f64; 6] {
        let (d, tf) = (self.delta, self.t_final);
        [0.0, d, 2.0 * d, tf - 2.0 * d, tf - d, tf]
    }

    pub fn samples(&self, times: &[f64]) -> Vec<f64> {
        times.iter().map(|&t| self.value(t)).collect()
    }
}
