//! Closed-form time integrals of the cutoff against products of modal oscillations.
//!
//! Everything reduces to `E(nu) = int_0^T eta(t) exp(i nu (t - T)) dt`. On the
//! polynomial bands this is done by repeated integration by parts (or Gauss
//! quadrature when `nu * delta` is small), on the plateau by a sinc formula.

use std::sync::OnceLock;

use num_complex::Complex64;

use super::weight::{poly_eval, WeightFunction};
use crate::par;
use crate::quadrature::gauss_legendre;

const IBP_THRESHOLD: f64 = 8.0;
const BAND_GAUSS_POINTS: usize = 24;

fn band_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let (x, w) = gauss_legendre(BAND_GAUSS_POINTS);
        (
            x.iter().map(|x| 0.5 * (x + 1.0)).collect(),
            w.iter().map(|w| 0.5 * w).collect(),
        )
    })
}

/// `int_0^1 q(u) exp(i kappa u) du` for a quintic `q`.
fn poly_exp_integral(q: &[f64; 6], kappa: f64) -> Complex64 {
    if kappa.abs() < IBP_THRESHOLD {
        let (u, w) = band_rule();
        return u
            .iter()
            .zip(w)
            .map(|(&u, &w)| w * poly_eval(q, u) * Complex64::cis(kappa * u))
            .sum();
    }
    let end = Complex64::cis(kappa);
    let ik = Complex64::new(0.0, kappa);
    let mut deriv = *q;
    let mut denom = ik;
    let mut sign = 1.0;
    let mut acc = Complex64::new(0.0, 0.0);
    for order in 0..6 {
        let at_one: f64 = deriv.iter().sum();
        let at_zero = deriv[0];
        acc += sign * (end * at_one - at_zero) / denom;
        // differentiate in place
        for j in 0..5 - order {
            deriv[j] = deriv[j + 1] * (j + 1) as f64;
        }
        deriv[5 - order] = 0.0;
        sign = -sign;
        denom *= ik;
    }
    acc
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `int_0^T eta(t) exp(i nu (t - T)) dt`.
pub fn weighted_exponential(w: &WeightFunction, nu: f64) -> Complex64 {
    let (tf, d) = (w.t_final(), w.delta());
    let mut acc = Complex64::new(0.0, 0.0);
    for band in w.bands() {
        acc += d * Complex64::cis(nu * (band.start - tf)) * poly_exp_integral(&band.coeffs, nu * d);
    }
    let len = tf - 4.0 * d;
    acc += Complex64::cis(-0.5 * nu * tf) * (len * sinc(0.5 * nu * len));
    acc
}

/// Integrals of `eta` against products of the two modal shapes
/// `cos(mu (t-T))` and `sin(mu (t-T)) / mu` for every pair of frequencies.
///
/// Blocks are row-major `n x n`; `dc` is the transpose of `cd`.
#[derive(Debug, Clone)]
pub struct ModePairIntegrals {
    n: usize,
    cc: Vec<f64>,
    cd: Vec<f64>,
    dc: Vec<f64>,
    dd: Vec<f64>,
}

impl ModePairIntegrals {
    pub fn new(freqs: &[f64], w: &WeightFunction) -> Self {
        let rows = par::map_indices(freqs.len(), |i| Self::row(freqs, w, i));
        Self::from_rows(freqs.len(), rows)
    }

    /// Sequential variant, for callers that already parallelise at a coarser level.
    pub fn new_sequential(freqs: &[f64], w: &WeightFunction) -> Self {
        let rows = (0..freqs.len()).map(|i| Self::row(freqs, w, i)).collect();
        Self::from_rows(freqs.len(), rows)
    }

    #[allow(clippy::type_complexity)]
    fn row(freqs: &[f64], w: &WeightFunction, i: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = freqs.len();
        let mi = freqs[i];
        let mut cc = vec![0.0; n];
        let mut cd = vec![0.0; n];
        let mut dd = vec![0.0; n];
        for j in 0..n {
            let mj = freqs[j];
            let ep = weighted_exponential(w, mi + mj);
            let em = weighted_exponential(w, mi - mj);
            cc[j] = 0.5 * (em.re + ep.re);
            // cos(mi s) sin(mj s) = (sin((mi+mj)s) - sin((mi-mj)s)) / 2
            cd[j] = 0.5 * (ep.im - em.im) / mj;
            dd[j] = 0.5 * (em.re - ep.re) / (mi * mj);
        }
        (cc, cd, dd)
    }

    #[allow(clippy::type_complexity)]
    fn from_rows(n: usize, rows: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)>) -> Self {
        let mut cc = Vec::with_capacity(n * n);
        let mut cd = Vec::with_capacity(n * n);
        let mut dd = Vec::with_capacity(n * n);
        for (a, b, c) in rows {
            cc.extend(a);
            cd.extend(b);
            dd.extend(c);
        }
        let mut dc = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                dc[j * n + i] = cd[i * n + j];
            }
        }
        Self { n, cc, cd, dc, dd }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Entry of the `2n x 2n` integral matrix in `[c; d]` ordering.
    pub fn entry(&self, p: usize, q: usize) -> f64 {
        let n = self.n;
        match (p < n, q < n) {
            (true, true) => self.cc[p * n + q],
            (true, false) => self.cd[p * n + q - n],
            (false, true) => self.dc[(p - n) * n + q],
            (false, false) => self.dd[(p - n) * n + q - n],
        }
    }

    /// Row `i` of the product with `[wc; wd]`, returned as the `(c, d)` components.
    #[inline]
    pub(crate) fn row_products(&self, i: usize, wc: &[f64], wd: &[f64]) -> (f64, f64) {
        let n = self.n;
        let r = i * n..(i + 1) * n;
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let yc = dot(&self.cc[r.clone()], wc) + dot(&self.cd[r.clone()], wd);
        let yd = dot(&self.dc[r.clone()], wc) + dot(&self.dd[r], wd);
        (yc, yd)
    }

    /// `y += scale * sum_o beta_o . (I (beta_o . z))`, sequential.
    pub(crate) fn accumulate_observed(
        &self,
        observations: &[&[f64]],
        zc: &[f64],
        zd: &[f64],
        scale: f64,
        yc: &mut [f64],
        yd: &mut [f64],
    ) {
        for beta in observations {
            let wc: Vec<f64> = beta.iter().zip(zc).map(|(b, z)| b * z).collect();
            let wd: Vec<f64> = beta.iter().zip(zd).map(|(b, z)| b * z).collect();
            for i in 0..self.n {
                let (a, b) = self.row_products(i, &wc, &wd);
                yc[i] += scale * beta[i] * a;
                yd[i] += scale * beta[i] * b;
            }
        }
    }
}
