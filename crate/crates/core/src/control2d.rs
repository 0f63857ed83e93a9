//! Tensor-product extension to the square: product eigenmodes, boundary
//! observation on all four sides, control on the two sides `x1 = 1` and `x2 = 1`.
//!
//! Node arrays are `(N1+1) x (N2+1)` matrices indexed `(a, b)` for the point
//! `(x1_a, x2_b)`. Modal vectors are flattened as `k * (N2-1) + m`.

use nalgebra::DMatrix;

use crate::adjoint1d::{TimeGrid, TraceWeights};
use crate::cg::preconditioned_cg;
use crate::error::{HumError, Result};
use crate::forward1d::propagate_mode;
use crate::hum1d::{jacobi, ModePairIntegrals, WeightFunction};
use crate::operators1d::{control_shapes, EigenBasis};
use crate::par;
use crate::quadrature::{DiffMatrices, QuadratureRule};

/// Sides of the square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// `x1 = 1`, controlled.
    Right,
    /// `x2 = 1`, controlled.
    Top,
    /// `x1 = -1`.
    Left,
    /// `x2 = -1`.
    Bottom,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Right, Side::Top, Side::Left, Side::Bottom];

    /// 0-based position in [`Side::ALL`].
    pub fn index(self) -> usize {
        match self {
            Side::Right => 0,
            Side::Top => 1,
            Side::Left => 2,
            Side::Bottom => 3,
        }
    }

    pub fn is_controlled(self) -> bool {
        matches!(self, Side::Right | Side::Top)
    }

    /// True when the side is normal to `x1`.
    pub fn normal_is_x1(self) -> bool {
        matches!(self, Side::Right | Side::Left)
    }
}

/// Which side owns each corner node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CornerAssignment {
    /// `(1, 1)`
    pub top_right: Side,
    /// `(1, -1)`
    pub bottom_right: Side,
    /// `(-1, 1)`
    pub top_left: Side,
    /// `(-1, -1)`
    pub bottom_left: Side,
}

impl Default for CornerAssignment {
    fn default() -> Self {
        Self {
            top_right: Side::Right,
            bottom_right: Side::Right,
            top_left: Side::Top,
            bottom_left: Side::Left,
        }
    }
}

impl CornerAssignment {
    fn validate(&self) -> Result<()> {
        let ok = matches!(self.top_right, Side::Right | Side::Top)
            && matches!(self.bottom_right, Side::Right | Side::Bottom)
            && matches!(self.top_left, Side::Left | Side::Top)
            && matches!(self.bottom_left, Side::Left | Side::Bottom);
        if ok {
            Ok(())
        } else {
            Err(HumError::Config(
                "each corner must be assigned to one of its two adjacent sides".into(),
            ))
        }
    }
}

#[derive(Debug, Clone)]
pub struct Grid2D {
    rule_x1: QuadratureRule,
    rule_x2: QuadratureRule,
    corners: CornerAssignment,
    sides: [Vec<(usize, usize)>; 4],
}

impl Grid2D {
    pub fn new(rule_x1: QuadratureRule, rule_x2: QuadratureRule) -> Result<Self> {
        Self::with_corners(rule_x1, rule_x2, CornerAssignment::default())
    }

    pub fn with_corners(
        rule_x1: QuadratureRule,
        rule_x2: QuadratureRule,
        corners: CornerAssignment,
    ) -> Result<Self> {
        corners.validate()?;
        let (n1, n2) = (rule_x1.order(), rule_x2.order());
        let mut sides: [Vec<(usize, usize)>; 4] = Default::default();
        for a in 0..=n1 {
            for b in 0..=n2 {
                let owner = match (a == 0, a == n1, b == 0, b == n2) {
                    (false, true, false, true) => corners.top_right,
                    (false, true, true, false) => corners.bottom_right,
                    (true, false, false, true) => corners.top_left,
                    (true, false, true, false) => corners.bottom_left,
                    (false, true, _, _) => Side::Right,
                    (true, false, _, _) => Side::Left,
                    (_, _, false, true) => Side::Top,
                    (_, _, true, false) => Side::Bottom,
                    _ => continue,
                };
                sides[owner.index()].push((a, b));
            }
        }
        Ok(Self {
            rule_x1,
            rule_x2,
            corners,
            sides,
        })
    }

    pub fn rule_x1(&self) -> &QuadratureRule {
        &self.rule_x1
    }

    pub fn rule_x2(&self) -> &QuadratureRule {
        &self.rule_x2
    }

    pub fn corners(&self) -> CornerAssignment {
        self.corners
    }

    pub fn side_nodes(&self, side: Side) -> &[(usize, usize)] {
        &self.sides[side.index()]
    }

    pub fn weight(&self, a: usize, b: usize) -> f64 {
        self.rule_x1.weights()[a] * self.rule_x2.weights()[b]
    }

    /// Index of the tangential coordinate of a boundary node on `side`.
    pub fn tangential_index(side: Side, node: (usize, usize)) -> usize {
        if side.normal_is_x1() {
            node.1
        } else {
            node.0
        }
    }

    /// Tangential quadrature weight of a boundary node on `side`.
    pub fn tangential_weight(&self, side: Side, node: (usize, usize)) -> f64 {
        if side.normal_is_x1() {
            self.rule_x2.weights()[node.1]
        } else {
            self.rule_x1.weights()[node.0]
        }
    }

    pub fn is_interior(&self, a: usize, b: usize) -> bool {
        a > 0 && a < self.rule_x1.order() && b > 0 && b < self.rule_x2.order()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rule_x1.len(), self.rule_x2.len())
    }

    /// `sum_i omega_i w_i z_i` over all nodes.
    pub fn inner(&self, w: &DMatrix<f64>, z: &DMatrix<f64>) -> Result<f64> {
        let shape = self.shape();
        for m in [w, z] {
            if m.shape() != shape {
                return Err(HumError::Dimension {
                    expected: shape.0 * shape.1,
                    got: m.len(),
                });
            }
        }
        let mut acc = 0.0;
        for a in 0..shape.0 {
            for b in 0..shape.1 {
                acc += self.weight(a, b) * w[(a, b)] * z[(a, b)];
            }
        }
        Ok(acc)
    }
}

/// Product modes `phi_k(x1) phi_m(x2)`.
#[derive(Debug, Clone)]
pub struct EigenBasis2D {
    b1: EigenBasis,
    b2: EigenBasis,
    ordering: Vec<(usize, usize)>,
}

pub fn tensor_basis(b1: &EigenBasis, b2: &EigenBasis) -> EigenBasis2D {
    let mut ordering: Vec<(usize, usize)> = (0..b1.count())
        .flat_map(|k| (0..b2.count()).map(move |m| (k, m)))
        .collect();
    let lam = |&(k, m): &(usize, usize)| b1.eigenvalues()[k] + b2.eigenvalues()[m];
    ordering.sort_by(|p, q| lam(p).total_cmp(&lam(q)).then(p.cmp(q)));
    EigenBasis2D {
        b1: b1.clone(),
        b2: b2.clone(),
        ordering,
    }
}

impl EigenBasis2D {
    pub fn x1(&self) -> &EigenBasis {
        &self.b1
    }

    pub fn x2(&self) -> &EigenBasis {
        &self.b2
    }

    pub fn n1(&self) -> usize {
        self.b1.count()
    }

    pub fn n2(&self) -> usize {
        self.b2.count()
    }

    pub fn count(&self) -> usize {
        self.n1() * self.n2()
    }

    /// Mode pairs `(k, m)`, 0-based, by ascending eigenvalue.
    pub fn ordering(&self) -> &[(usize, usize)] {
        &self.ordering
    }

    pub fn flat_index(&self, k: usize, m: usize) -> usize {
        k * self.n2() + m
    }

    pub fn eigenvalue(&self, k: usize, m: usize) -> f64 {
        self.b1.eigenvalues()[k] + self.b2.eigenvalues()[m]
    }

    pub fn frequency(&self, k: usize, m: usize) -> f64 {
        self.eigenvalue(k, m).sqrt()
    }

    /// `||Phi_km||_N^2`.
    pub fn norm_n(&self, k: usize, m: usize) -> f64 {
        self.b1.norms_n()[k] * self.b2.norms_n()[m]
    }

    pub fn mode_values(&self, k: usize, m: usize) -> DMatrix<f64> {
        let (p, q) = (self.b1.mode(k), self.b2.mode(m));
        DMatrix::from_fn(p.len(), q.len(), |a, b| p[a] * q[b])
    }

    /// Outward normal derivative and second normal derivative of mode `(k, m)`
    /// along the full tangential line of `side`.
    pub fn side_traces(&self, side: Side, k: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
        let (t1, t2) = (self.b1.traces()[k], self.b2.traces()[m]);
        let (dn, dnn, tangential) = match side {
            Side::Right => (t1.dx_right, t1.dxx_right, self.b2.mode(m)),
            Side::Left => (-t1.dx_left, t1.dxx_left, self.b2.mode(m)),
            Side::Top => (t2.dx_right, t2.dxx_right, self.b1.mode(k)),
            Side::Bottom => (-t2.dx_left, t2.dxx_left, self.b1.mode(k)),
        };
        (
            tangential.iter().map(|v| dn * v).collect(),
            tangential.iter().map(|v| dnn * v).collect(),
        )
    }

    /// Node values of `sum c_km Phi_km`; `coeffs` is `n1 x n2`.
    pub fn synthesize(&self, coeffs: &DMatrix<f64>) -> DMatrix<f64> {
        let p1 = mode_matrix(&self.b1);
        let p2 = mode_matrix(&self.b2);
        &p1 * coeffs * p2.transpose()
    }

    /// Moments `(v, Phi_km)_N` as an `n1 x n2` matrix.
    pub fn moments(&self, v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let shape = (self.b1.rule().len(), self.b2.rule().len());
        if v.shape() != shape {
            return Err(HumError::Dimension {
                expected: shape.0 * shape.1,
                got: v.len(),
            });
        }
        let p1 = weighted_mode_matrix(&self.b1);
        let p2 = weighted_mode_matrix(&self.b2);
        Ok(p1.transpose() * v * p2)
    }

    /// Modal coefficients, moments divided by `||Phi_km||_N^2`.
    pub fn project(&self, v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut c = self.moments(v)?;
        for k in 0..self.n1() {
            for m in 0..self.n2() {
                c[(k, m)] /= self.norm_n(k, m);
            }
        }
        Ok(c)
    }
}

/// `(N+1) x (N-1)` matrix of mode node values.
fn mode_matrix(b: &EigenBasis) -> DMatrix<f64> {
    DMatrix::from_fn(b.rule().len(), b.count(), |a, k| b.mode(k)[a])
}

fn weighted_mode_matrix(b: &EigenBasis) -> DMatrix<f64> {
    let w = b.rule().weights();
    DMatrix::from_fn(b.rule().len(), b.count(), |a, k| w[a] * b.mode(k)[a])
}

/// One-dimensional shape profiles; `G1 = G_R(x1)`, `G3 = G_L(x1)`, `G2 = G_R(x2)`, `G4 = G_L(x2)`.
#[derive(Debug, Clone)]
pub struct Shapes2D {
    pub right_x1: Vec<f64>,
    pub left_x1: Vec<f64>,
    pub right_x2: Vec<f64>,
    pub left_x2: Vec<f64>,
}

impl Shapes2D {
    /// Value of `G_side` at node `(a, b)`; constant in the tangential direction.
    pub fn value(&self, side: Side, a: usize, b: usize) -> f64 {
        match side {
            Side::Right => self.right_x1[a],
            Side::Left => self.left_x1[a],
            Side::Top => self.right_x2[b],
            Side::Bottom => self.left_x2[b],
        }
    }

    pub fn profile(&self, side: Side) -> &[f64] {
        match side {
            Side::Right => &self.right_x1,
            Side::Left => &self.left_x1,
            Side::Top => &self.right_x2,
            Side::Bottom => &self.left_x2,
        }
    }
}

pub fn shapes_2d(grid: &Grid2D, diff_x1: &DiffMatrices, diff_x2: &DiffMatrices) -> Shapes2D {
    let s1 = control_shapes(grid.rule_x1(), diff_x1);
    let s2 = control_shapes(grid.rule_x2(), diff_x2);
    Shapes2D {
        right_x1: s1.g_right,
        left_x1: s1.g_left,
        right_x2: s2.g_right,
        left_x2: s2.g_left,
    }
}

/// Observation tables for the two sides normal to one coordinate direction.
#[derive(Debug, Clone)]
struct DirectionBlock {
    /// One table per tangential mode index.
    integrals: Vec<ModePairIntegrals>,
    /// `||phi||_N^2` of the tangential factor.
    tangential_norms: Vec<f64>,
    /// Trace constants over the normal mode index: controlled side `f`,
    /// controlled side `g`, opposite side `g`.
    observations: [Vec<f64>; 3],
}

impl DirectionBlock {
    fn new(normal: &EigenBasis, tangential: &EigenBasis, w: &WeightFunction) -> Self {
        let lam_n = normal.eigenvalues();
        let integrals = par::map_indices(tangential.count(), |j| {
            let lt = tangential.eigenvalues()[j];
            let freqs: Vec<f64> = lam_n.iter().map(|l| (l + lt).sqrt()).collect();
            ModePairIntegrals::new_sequential(&freqs, w)
        });
        let tw = TraceWeights::new(normal);
        Self {
            integrals,
            tangential_norms: tangential.norms_n().to_vec(),
            observations: [tw.f, tw.right, tw.left],
        }
    }

    fn observation_refs(&self) -> [&[f64]; 3] {
        [
            &self.observations[0],
            &self.observations[1],
            &self.observations[2],
        ]
    }
}

/// Quadratic part of the 2-d functional, matrix-free on `[c; d]`.
#[derive(Debug, Clone)]
pub struct Gramian2D {
    n1: usize,
    n2: usize,
    dir1: DirectionBlock,
    dir2: DirectionBlock,
    precond: Vec<f64>,
}

/// Largest system for which [`Gramian2D::dense`] is allowed.
pub const DENSE_LIMIT_2D: usize = 2000;

impl Gramian2D {
    pub fn new(basis: &EigenBasis2D, w: &WeightFunction) -> Self {
        let mut g = Self {
            n1: basis.n1(),
            n2: basis.n2(),
            dir1: DirectionBlock::new(basis.x1(), basis.x2(), w),
            dir2: DirectionBlock::new(basis.x2(), basis.x1(), w),
            precond: Vec::new(),
        };
        g.precond = jacobi(&g.diagonal());
        g
    }

    /// Diagonal of the operator, used as the Jacobi preconditioner.
    pub fn diagonal(&self) -> Vec<f64> {
        let (n1, n2) = (self.n1, self.n2);
        let n = n1 * n2;
        let mut diag = vec![0.0; 2 * n];
        for k in 0..n1 {
            for m in 0..n2 {
                let (t1, t2) = (&self.dir1.integrals[m], &self.dir2.integrals[k]);
                let o1: f64 = self.dir1.observations.iter().map(|o| o[k] * o[k]).sum();
                let o2: f64 = self.dir2.observations.iter().map(|o| o[m] * o[m]).sum();
                let (s1, s2) = (
                    self.dir1.tangential_norms[m] * o1,
                    self.dir2.tangential_norms[k] * o2,
                );
                diag[k * n2 + m] = s1 * t1.entry(k, k) + s2 * t2.entry(m, m);
                diag[n + k * n2 + m] =
                    s1 * t1.entry(k + n1, k + n1) + s2 * t2.entry(m + n2, m + n2);
            }
        }
        diag
    }

    pub fn dim(&self) -> usize {
        2 * self.n1 * self.n2
    }

    pub fn preconditioner(&self) -> &[f64] {
        &self.precond
    }

    pub fn apply_flat(&self, z: &[f64]) -> Vec<f64> {
        let (n1, n2) = (self.n1, self.n2);
        let n = n1 * n2;
        let (zc, zd) = z.split_at(n);
        let mut out = vec![0.0; 2 * n];

        let obs1 = self.dir1.observation_refs();
        let along_x1 = par::map_indices(n2, |m| {
            let gc: Vec<f64> = (0..n1).map(|k| zc[k * n2 + m]).collect();
            let gd: Vec<f64> = (0..n1).map(|k| zd[k * n2 + m]).collect();
            let mut yc = vec![0.0; n1];
            let mut yd = vec![0.0; n1];
            self.dir1.integrals[m].accumulate_observed(
                &obs1,
                &gc,
                &gd,
                self.dir1.tangential_norms[m],
                &mut yc,
                &mut yd,
            );
            (yc, yd)
        });
        for (m, (yc, yd)) in along_x1.into_iter().enumerate() {
            for k in 0..n1 {
                out[k * n2 + m] += yc[k];
                out[n + k * n2 + m] += yd[k];
            }
        }

        let obs2 = self.dir2.observation_refs();
        let along_x2 = par::map_indices(n1, |k| {
            let r = k * n2..(k + 1) * n2;
            let mut yc = vec![0.0; n2];
            let mut yd = vec![0.0; n2];
            self.dir2.integrals[k].accumulate_observed(
                &obs2,
                &zc[r.clone()],
                &zd[r],
                self.dir2.tangential_norms[k],
                &mut yc,
                &mut yd,
            );
            (yc, yd)
        });
        for (k, (yc, yd)) in along_x2.into_iter().enumerate() {
            for m in 0..n2 {
                out[k * n2 + m] += yc[m];
                out[n + k * n2 + m] += yd[m];
            }
        }
        out
    }

    pub fn quadratic_form(&self, z: &[f64]) -> f64 {
        self.apply_flat(z).iter().zip(z).map(|(a, b)| a * b).sum()
    }

    /// Explicit assembly, refused above [`DENSE_LIMIT_2D`] unknowns.
    pub fn dense(&self) -> Result<DMatrix<f64>> {
        let dim = self.dim();
        if dim > DENSE_LIMIT_2D {
            return Err(HumError::Config(format!(
                "dense 2-d Gramian of size {dim} exceeds the limit {DENSE_LIMIT_2D}"
            )));
        }
        let (n1, n2) = (self.n1, self.n2);
        let n = n1 * n2;
        // (is_sine, k, m)
        let split = |p: usize| (p >= n, (p % n) / n2, (p % n) % n2);
        let entry = |p: usize, q: usize| -> f64 {
            let (sp, kp, mp) = split(p);
            let (sq, kq, mq) = split(q);
            let mut v = 0.0;
            if mp == mq {
                let t = &self.dir1.integrals[mp];
                let w: f64 = self.dir1.observations.iter().map(|o| o[kp] * o[kq]).sum();
                v += self.dir1.tangential_norms[mp]
                    * w
                    * t.entry(kp + usize::from(sp) * n1, kq + usize::from(sq) * n1);
            }
            if kp == kq {
                let t = &self.dir2.integrals[kp];
                let w: f64 = self.dir2.observations.iter().map(|o| o[mp] * o[mq]).sum();
                v += self.dir2.tangential_norms[kp]
                    * w
                    * t.entry(mp + usize::from(sp) * n2, mq + usize::from(sq) * n2);
            }
            v
        };
        let cols = par::map_indices(dim, |q| (0..dim).map(|p| entry(p, q)).collect::<Vec<f64>>());
        Ok(DMatrix::from_fn(dim, dim, |p, q| cols[q][p]))
    }
}

/// Time series on one side, `(time samples) x (tangential nodes of the full line)`.
/// Entries at corners are zero because every mode vanishes there.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSet2D {
    pub grid: TimeGrid,
    /// Dirichlet control on the right and top sides.
    pub f_right: DMatrix<f64>,
    pub f_top: DMatrix<f64>,
    /// Artificial controls indexed by [`Side::index`].
    pub g: [DMatrix<f64>; 4],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlNorms2D {
    pub f: f64,
    pub g: [f64; 4],
}

impl ControlSet2D {
    pub fn zeros(tgrid: &TimeGrid, grid: &Grid2D) -> Self {
        let (l1, l2) = grid.shape();
        let m = tgrid.len();
        let z = |len: usize| DMatrix::zeros(m, len);
        Self {
            grid: tgrid.clone(),
            f_right: z(l2),
            f_top: z(l1),
            g: [z(l2), z(l1), z(l2), z(l1)],
        }
    }

    fn side_sq(series: &DMatrix<f64>, side: Side, grid: &Grid2D, t: usize) -> f64 {
        grid.side_nodes(side)
            .iter()
            .map(|&node| {
                let j = Grid2D::tangential_index(side, node);
                grid.tangential_weight(side, node) * series[(t, j)].powi(2)
            })
            .sum()
    }

    /// `(sum over controlled boundary nodes of omega f^2)^(1/2)` at each time.
    pub fn f_profile(&self, grid: &Grid2D) -> Vec<f64> {
        (0..self.grid.len())
            .map(|t| {
                (Self::side_sq(&self.f_right, Side::Right, grid, t)
                    + Self::side_sq(&self.f_top, Side::Top, grid, t))
                .sqrt()
            })
            .collect()
    }

    /// `L^2(0,T; side)` norms with tangential weights, trapezoidal in time.
    pub fn norms(&self, grid: &Grid2D) -> ControlNorms2D {
        let f = self.grid.l2_norm(&self.f_profile(grid));
        let mut g = [0.0; 4];
        for side in Side::ALL {
            let prof: Vec<f64> = (0..self.grid.len())
                .map(|t| Self::side_sq(&self.g[side.index()], side, grid, t).sqrt())
                .collect();
            g[side.index()] = self.grid.l2_norm(&prof);
        }
        ControlNorms2D { f, g }
    }
}

#[derive(Debug, Clone)]
pub struct HumSolution2D {
    /// `c` and `d` as `n1 x n2` matrices.
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub controls: ControlSet2D,
    pub functional_value: f64,
    pub cg_iterations: usize,
    pub cg_residual: f64,
    pub gramian_condition_estimate: Option<f64>,
    pub forward_residual: Option<f64>,
}

fn check_data_2d(u: &DMatrix<f64>, grid: &Grid2D) -> Result<()> {
    let shape = grid.shape();
    if u.shape() != shape {
        return Err(HumError::Dimension {
            expected: shape.0 * shape.1,
            got: u.len(),
        });
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(HumError::InvalidData("non-finite initial data".into()));
    }
    for side in Side::ALL {
        if grid.side_nodes(side).iter().any(|&(a, b)| u[(a, b)] != 0.0) {
            return Err(HumError::InvalidData(
                "initial data must vanish on the boundary".into(),
            ));
        }
    }
    Ok(())
}

/// Flattened right-hand side `[b_c; b_d]`.
pub fn rhs_vector_2d(
    u0: &DMatrix<f64>,
    u1: &DMatrix<f64>,
    basis: &EigenBasis2D,
    t_final: f64,
) -> Result<Vec<f64>> {
    let m0 = basis.moments(u0)?;
    let m1 = basis.moments(u1)?;
    let n = basis.count();
    let mut b = vec![0.0; 2 * n];
    for k in 0..basis.n1() {
        for m in 0..basis.n2() {
            let i = basis.flat_index(k, m);
            let mu = basis.frequency(k, m);
            let (sn, cs) = (mu * t_final).sin_cos();
            b[i] = cs * m1[(k, m)] - mu * sn * m0[(k, m)];
            b[n + i] = -sn / mu * m1[(k, m)] - cs * m0[(k, m)];
        }
    }
    Ok(b)
}

/// Reusable 2-d solver for one basis and cutoff.
#[derive(Debug, Clone)]
pub struct HumSolver2D<'a> {
    grid: &'a Grid2D,
    basis: &'a EigenBasis2D,
    weight: WeightFunction,
    gramian: Gramian2D,
}

impl<'a> HumSolver2D<'a> {
    pub fn new(grid: &'a Grid2D, basis: &'a EigenBasis2D, weight: WeightFunction) -> Self {
        let threshold = 4.0 * std::f64::consts::SQRT_2;
        if weight.t_final() <= threshold {
            log::warn!(
                "T = {} is below the 2-d observability time {threshold:.4}",
                weight.t_final()
            );
        }
        Self {
            grid,
            basis,
            weight,
            gramian: Gramian2D::new(basis, &weight),
        }
    }

    pub fn gramian(&self) -> &Gramian2D {
        &self.gramian
    }

    pub fn solve(
        &self,
        u0: &DMatrix<f64>,
        u1: &DMatrix<f64>,
        tgrid: &TimeGrid,
        tol: f64,
        max_iter: usize,
    ) -> Result<HumSolution2D> {
        check_data_2d(u0, self.grid)?;
        check_data_2d(u1, self.grid)?;
        if (tgrid.t_final() - self.weight.t_final()).abs() > 1e-12 * tgrid.t_final() {
            return Err(HumError::Config(format!(
                "time grid ends at {} but the cutoff at {}",
                tgrid.t_final(),
                self.weight.t_final()
            )));
        }
        let b = rhs_vector_2d(u0, u1, self.basis, self.weight.t_final())?;
        let out = preconditioned_cg(
            |z| self.gramian.apply_flat(z),
            self.gramian.preconditioner(),
            &b,
            tol,
            max_iter,
        )?;
        let functional_value = -0.5 * out.solution.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>();
        let (n1, n2) = (self.basis.n1(), self.basis.n2());
        let n = n1 * n2;
        let c = DMatrix::from_fn(n1, n2, |k, m| out.solution[k * n2 + m]);
        let d = DMatrix::from_fn(n1, n2, |k, m| out.solution[n + k * n2 + m]);
        let controls = extract_controls_2d(&c, &d, &self.weight, tgrid, self.grid, self.basis)?;
        Ok(HumSolution2D {
            c,
            d,
            controls,
            functional_value,
            cg_iterations: out.iterations,
            cg_residual: out.relative_residual,
            gramian_condition_estimate: out.condition_estimate(),
            forward_residual: None,
        })
    }
}

#[allow(clippy::too_many_arguments)]
pub fn solve_hum_2d(
    data: (&DMatrix<f64>, &DMatrix<f64>),
    grid: &Grid2D,
    basis: &EigenBasis2D,
    w: &WeightFunction,
    tgrid: &TimeGrid,
    tol: f64,
    max_iter: usize,
) -> Result<HumSolution2D> {
    HumSolver2D::new(grid, basis, *w).solve(data.0, data.1, tgrid, tol, max_iter)
}

/// Boundary controls `eta * trace` of the adjoint solution with final data `(c, d)`.
pub fn extract_controls_2d(
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
    w: &WeightFunction,
    tgrid: &TimeGrid,
    grid: &Grid2D,
    basis: &EigenBasis2D,
) -> Result<ControlSet2D> {
    let (n1, n2) = (basis.n1(), basis.n2());
    if c.shape() != (n1, n2) || d.shape() != (n1, n2) {
        return Err(HumError::Dimension {
            expected: n1 * n2,
            got: c.len(),
        });
    }
    let tw1 = TraceWeights::new(basis.x1());
    let tw2 = TraceWeights::new(basis.x2());
    let p1 = mode_matrix(basis.x1());
    let p2 = mode_matrix(basis.x2());
    let mu = DMatrix::from_fn(n1, n2, |k, m| basis.frequency(k, m));
    let t_final = w.t_final();
    let (l1, l2) = grid.shape();

    // per time: six tangential line values
    let rows = par::map_indices(tgrid.len(), |j| {
        let t = tgrid.time(j);
        let eta = w.value(t);
        let s = t - t_final;
        let theta = DMatrix::from_fn(n1, n2, |k, m| {
            let (sn, cs) = (mu[(k, m)] * s).sin_cos();
            c[(k, m)] * cs + d[(k, m)] / mu[(k, m)] * sn
        });
        // contractions over the normal index
        let along_x1 = |beta: &[f64]| -> Vec<f64> {
            let s: Vec<f64> = (0..n2)
                .map(|m| (0..n1).map(|k| beta[k] * theta[(k, m)]).sum())
                .collect();
            (0..l2)
                .map(|b| eta * (0..n2).map(|m| s[m] * p2[(b, m)]).sum::<f64>())
                .collect()
        };
        let along_x2 = |beta: &[f64]| -> Vec<f64> {
            let s: Vec<f64> = (0..n1)
                .map(|k| (0..n2).map(|m| beta[m] * theta[(k, m)]).sum())
                .collect();
            (0..l1)
                .map(|a| eta * (0..n1).map(|k| s[k] * p1[(a, k)]).sum::<f64>())
                .collect()
        };
        [
            along_x1(&tw1.f),
            along_x1(&tw1.right),
            along_x1(&tw1.left),
            along_x2(&tw2.f),
            along_x2(&tw2.right),
            along_x2(&tw2.left),
        ]
    });
    let collect = |i: usize, len: usize| DMatrix::from_fn(tgrid.len(), len, |t, j| rows[t][i][j]);
    Ok(ControlSet2D {
        grid: tgrid.clone(),
        f_right: collect(0, l2),
        f_top: collect(3, l1),
        g: [
            collect(1, l2),
            collect(4, l1),
            collect(2, l2),
            collect(5, l1),
        ],
    })
}

/// Modal amplitudes of the forward 2-d solution at every grid time.
#[derive(Debug, Clone)]
pub struct ForwardTrajectory2D {
    tgrid: TimeGrid,
    n2: usize,
    amplitudes: Vec<Vec<f64>>,
    velocities: Vec<Vec<f64>>,
    f_right: DMatrix<f64>,
    f_top: DMatrix<f64>,
}

/// Node values and interior velocity at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardState2D {
    pub u: DMatrix<f64>,
    /// Zero on the boundary.
    pub v: DMatrix<f64>,
    pub t: f64,
}

impl ForwardTrajectory2D {
    pub fn state(&self, basis: &EigenBasis2D, j: usize) -> ForwardState2D {
        let (n1, n2) = (basis.n1(), self.n2);
        let q = DMatrix::from_fn(n1, n2, |k, m| self.amplitudes[k * n2 + m][j]);
        let v = DMatrix::from_fn(n1, n2, |k, m| self.velocities[k * n2 + m][j]);
        let mut u = basis.synthesize(&q);
        let v = basis.synthesize(&v);
        let (l1, l2) = (u.nrows(), u.ncols());
        for b in 0..l2 {
            u[(l1 - 1, b)] = self.f_right[(j, b)];
        }
        for a in 0..l1 - 1 {
            u[(a, l2 - 1)] = self.f_top[(j, a)];
        }
        ForwardState2D {
            u,
            v,
            t: self.tgrid.time(j),
        }
    }

    pub fn final_state(&self, basis: &EigenBasis2D) -> ForwardState2D {
        self.state(basis, self.tgrid.steps())
    }
}

pub fn forward_trajectory_2d(
    data: (&DMatrix<f64>, &DMatrix<f64>),
    controls: &ControlSet2D,
    grid: &Grid2D,
    basis: &EigenBasis2D,
    tgrid: &TimeGrid,
) -> Result<ForwardTrajectory2D> {
    let (u0, u1) = data;
    let shape = grid.shape();
    for u in [u0, u1] {
        if u.shape() != shape {
            return Err(HumError::Dimension {
                expected: shape.0 * shape.1,
                got: u.len(),
            });
        }
    }
    if controls.grid != *tgrid {
        return Err(HumError::Dimension {
            expected: tgrid.len(),
            got: controls.grid.len(),
        });
    }
    let (l1, l2) = shape;
    let (n1, n2) = (basis.n1(), basis.n2());
    let (b1, b2) = (basis.x1(), basis.x2());
    let interior = |u: &DMatrix<f64>| {
        DMatrix::from_fn(l1, l2, |a, b| {
            if grid.is_interior(a, b) {
                u[(a, b)]
            } else {
                0.0
            }
        })
    };
    let q0 = basis.project(&interior(u0))?;
    let v0 = basis.project(&interior(u1))?;

    // normal-direction moments of the lifting column and the two shapes
    let normal_moments = |b: &EigenBasis| -> Result<[Vec<f64>; 3]> {
        let n = b.order();
        let d2 = b.diff().d2();
        let mut col = vec![0.0; n + 1];
        for (i, c) in col.iter_mut().enumerate().take(n).skip(1) {
            *c = d2[(i, n)];
        }
        let shapes = control_shapes(b.rule(), b.diff());
        Ok([
            b.moments(&col)?,
            b.moments(&shapes.g_right)?,
            b.moments(&shapes.g_left)?,
        ])
    };
    let [col1, gr1, gl1] = normal_moments(b1)?;
    let [col2, gr2, gl2] = normal_moments(b2)?;

    // tangential moments of each boundary series, per time
    let tangential = |series: &DMatrix<f64>, b: &EigenBasis| -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(tgrid.len(), b.count());
        for j in 0..tgrid.len() {
            let row: Vec<f64> = series.row(j).iter().copied().collect();
            let mom = b.moments(&row)?;
            for (k, v) in mom.into_iter().enumerate() {
                out[(j, k)] = v;
            }
        }
        Ok(out)
    };
    let t1f = tangential(&controls.f_right, b2)?;
    let t1g = tangential(&controls.g[Side::Right.index()], b2)?;
    let t3g = tangential(&controls.g[Side::Left.index()], b2)?;
    let t2f = tangential(&controls.f_top, b1)?;
    let t2g = tangential(&controls.g[Side::Top.index()], b1)?;
    let t4g = tangential(&controls.g[Side::Bottom.index()], b1)?;

    let modal = par::map_indices(n1 * n2, |i| {
        let (k, m) = (i / n2, i % n2);
        let norm = basis.norm_n(k, m);
        let forcing: Vec<f64> = (0..tgrid.len())
            .map(|j| {
                (col1[k] * t1f[(j, m)]
                    + gr1[k] * t1g[(j, m)]
                    + gl1[k] * t3g[(j, m)]
                    + col2[m] * t2f[(j, k)]
                    + gr2[m] * t2g[(j, k)]
                    + gl2[m] * t4g[(j, k)])
                    / norm
            })
            .collect();
        propagate_mode(
            basis.frequency(k, m),
            q0[(k, m)],
            v0[(k, m)],
            &forcing,
            tgrid,
        )
    });
    let (amplitudes, velocities) = modal.into_iter().unzip();
    Ok(ForwardTrajectory2D {
        tgrid: tgrid.clone(),
        n2,
        amplitudes,
        velocities,
        f_right: controls.f_right.clone(),
        f_top: controls.f_top.clone(),
    })
}

/// Relative final norm `sqrt(||u(T)||^2 + ||u_t(T)||^2) / sqrt(||u0||^2 + ||u1||^2)`.
pub fn forward_verify_2d(
    data: (&DMatrix<f64>, &DMatrix<f64>),
    controls: &ControlSet2D,
    grid: &Grid2D,
    basis: &EigenBasis2D,
    tgrid: &TimeGrid,
) -> Result<f64> {
    let traj = forward_trajectory_2d(data, controls, grid, basis, tgrid)?;
    let state = traj.final_state(basis);
    let (l1, l2) = grid.shape();
    let sq = |u: &DMatrix<f64>| -> f64 {
        let mut acc = 0.0;
        for a in 1..l1 - 1 {
            for b in 1..l2 - 1 {
                acc += grid.weight(a, b) * u[(a, b)].powi(2);
            }
        }
        acc
    };
    let num = sq(&state.u) + sq(&state.v);
    let den = sq(data.0) + sq(data.1);
    Ok(num.sqrt() / den.sqrt().max(1e-300))
}

/// `1/2 (||u_t||^2 + ||u_x1||^2 + ||u_x2||^2)` in the discrete norm.
pub fn energy_2d(state: &ForwardState2D, grid: &Grid2D, basis: &EigenBasis2D) -> f64 {
    let d1x = basis.x1().diff().d1();
    let d1y = basis.x2().diff().d1();
    let ux = d1x * &state.u;
    let uy = &state.u * d1y.transpose();
    let kin = grid.inner(&state.v, &state.v).unwrap_or(f64::NAN);
    let pot = grid.inner(&ux, &ux).unwrap_or(f64::NAN) + grid.inner(&uy, &uy).unwrap_or(f64::NAN);
    0.5 * (kin + pot)
}
