#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Coefficients by ascending power, uniform in [-1, 1].
pub fn random_poly(rng: &mut impl Rng, degree: usize) -> Vec<f64> {
    (0..=degree).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

pub fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Exact integral over [-1, 1].
pub fn poly_integral(c: &[f64]) -> f64 {
    c.iter()
        .enumerate()
        .filter(|(k, _)| k % 2 == 0)
        .map(|(k, a)| 2.0 * a / (k as f64 + 1.0))
        .sum()
}

pub fn poly_derivative(c: &[f64]) -> Vec<f64> {
    if c.len() <= 1 {
        return vec![0.0];
    }
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(k, a)| k as f64 * a)
        .collect()
}

/// Random node vector vanishing at both ends.
pub fn random_interior(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..=n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    v[0] = 0.0;
    v[n] = 0.0;
    v
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}
