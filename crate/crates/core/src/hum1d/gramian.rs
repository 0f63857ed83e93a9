use nalgebra::DMatrix;

use super::integrals::ModePairIntegrals;
use super::weight::WeightFunction;
use crate::adjoint1d::{AdjointFinalData, TraceWeights};
use crate::error::{check_len, Result};
use crate::operators1d::EigenBasis;
use crate::par;

/// Quadratic part of the HUM functional in modal coordinates `[c; d]`.
///
/// `(Lz, z) = int eta |psi_f|^2 + int eta |psi_r|^2 + int eta |psi_l|^2`.
#[derive(Debug, Clone)]
pub struct Gramian1d {
    integrals: ModePairIntegrals,
    observations: [Vec<f64>; 3],
    precond: Vec<f64>,
}

impl Gramian1d {
    pub fn new(basis: &EigenBasis, w: &WeightFunction) -> Self {
        let integrals = ModePairIntegrals::new(basis.frequencies(), w);
        let tw = TraceWeights::new(basis);
        let mut g = Self {
            integrals,
            observations: [tw.f, tw.right, tw.left],
            precond: Vec::new(),
        };
        g.precond = jacobi(&g.diagonal());
        g
    }

    /// Diagonal entries in `[c; d]` ordering.
    pub fn diagonal(&self) -> Vec<f64> {
        let n = self.integrals.len();
        (0..2 * n)
            .map(|p| {
                let w: f64 = self.observations.iter().map(|o| o[p % n] * o[p % n]).sum();
                w * self.integrals.entry(p, p)
            })
            .collect()
    }

    /// Number of unknowns, `2 (N - 1)`.
    pub fn dim(&self) -> usize {
        2 * self.integrals.len()
    }

    pub fn integrals(&self) -> &ModePairIntegrals {
        &self.integrals
    }

    /// Jacobi preconditioner, the inverse of [`Self::diagonal`].
    pub fn preconditioner(&self) -> &[f64] {
        &self.precond
    }

    /// Matrix-free product on the flattened `[c; d]` vector.
    pub fn apply_flat(&self, z: &[f64]) -> Vec<f64> {
        let n = self.integrals.len();
        let (zc, zd) = z.split_at(n);
        let weighted: Vec<(Vec<f64>, Vec<f64>)> = self
            .observations
            .iter()
            .map(|b| {
                (
                    b.iter().zip(zc).map(|(x, y)| x * y).collect(),
                    b.iter().zip(zd).map(|(x, y)| x * y).collect(),
                )
            })
            .collect();
        let rows = par::map_indices(n, |i| {
            let (mut yc, mut yd) = (0.0, 0.0);
            for (beta, (wc, wd)) in self.observations.iter().zip(&weighted) {
                let (a, b) = self.integrals.row_products(i, wc, wd);
                yc += beta[i] * a;
                yd += beta[i] * b;
            }
            (yc, yd)
        });
        let mut out = vec![0.0; 2 * n];
        for (i, (a, b)) in rows.into_iter().enumerate() {
            out[i] = a;
            out[n + i] = b;
        }
        out
    }

    pub fn apply(&self, z: &AdjointFinalData) -> Result<AdjointFinalData> {
        check_len(self.integrals.len(), z.count())?;
        AdjointFinalData::from_flat(&self.apply_flat(&z.to_flat()))
    }

    pub fn quadratic_form(&self, z: &[f64]) -> f64 {
        self.apply_flat(z).iter().zip(z).map(|(a, b)| a * b).sum()
    }

    /// Explicitly assembled `2(N-1)` square matrix.
    pub fn dense(&self) -> DMatrix<f64> {
        let dim = self.dim();
        let n = self.integrals.len();
        let beta = |o: usize, p: usize| self.observations[o][p % n];
        let cols = par::map_indices(dim, |q| {
            (0..dim)
                .map(|p| {
                    let w: f64 = (0..3).map(|o| beta(o, p) * beta(o, q)).sum();
                    w * self.integrals.entry(p, q)
                })
                .collect::<Vec<f64>>()
        });
        DMatrix::from_fn(dim, dim, |p, q| cols[q][p])
    }
}

/// Entrywise inverse of a positive diagonal. Non-positive entries map to 1.
pub fn jacobi(diag: &[f64]) -> Vec<f64> {
    diag.iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect()
}

/// `1 / (lambda_k ||phi_k||^2)` on cosine components, `1 / ||phi_k||^2` on sine components.
pub fn energy_preconditioner(eigenvalues: &[f64], norms: &[f64]) -> Vec<f64> {
    let mut p: Vec<f64> = eigenvalues
        .iter()
        .zip(norms)
        .map(|(l, n)| 1.0 / (l * n))
        .collect();
    p.extend(norms.iter().map(|n| 1.0 / n));
    p
}

pub fn gramian_apply(
    coeffs: &AdjointFinalData,
    w: &WeightFunction,
    basis: &EigenBasis,
) -> Result<AdjointFinalData> {
    Gramian1d::new(basis, w).apply(coeffs)
}
