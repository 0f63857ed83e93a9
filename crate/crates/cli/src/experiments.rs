//! The five experiment drivers. Each returns finished tables; rows are sorted by order.

use std::path::Path;

use hum_spectral::adjoint1d::{AdjointFinalData, TimeGrid};
use hum_spectral::control2d::{
    extract_controls_2d, forward_verify_2d, tensor_basis, ControlSet2D, Grid2D, HumSolver2D,
};
use hum_spectral::forward1d::{final_residual, forward_solve};
use hum_spectral::hum1d::{extract_controls, ControlSet, HumSolver, WeightFunction};
use hum_spectral::initial_data::{interpolate_samples, truncated_projection, BuiltinData};
use hum_spectral::operators1d::{assemble_laplacian, control_shapes, EigenBasis};
use hum_spectral::spectral_analysis::{
    gap_scan, observability_quotient, scaling_fit, top_pair_gap,
};
use hum_spectral::{par, HumError};
use nalgebra::DMatrix;
use serde::Deserialize;

use crate::config::{Config, Experiment};
use crate::error::{CliError, Result};
use crate::table::{Cell, Table};

const CONVERGED: &str = "ok";
const UNCONVERGED: &str = "cg-not-converged";

pub struct Outcome {
    pub tables: Vec<Table>,
    pub unconverged: usize,
}

pub fn run(cfg: &Config) -> Result<Outcome> {
    match cfg.experiment {
        Experiment::GaussianTable => table_1d(cfg, BuiltinData::GaussianBump),
        Experiment::HatTable => table_1d(cfg, BuiltinData::Hat),
        Experiment::Convergence => convergence(cfg),
        Experiment::Square => square(cfg),
        Experiment::Spectra => spectra(cfg),
    }
}

fn sorted(orders: &[usize]) -> Vec<usize> {
    let mut v = orders.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

#[derive(Deserialize)]
struct NodeRow {
    u0: f64,
    u1: f64,
}

fn read_nodes(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let rows: Vec<NodeRow> = r.deserialize().collect::<std::result::Result<_, _>>()?;
    Ok(rows.iter().map(|r| (r.u0, r.u1)).unzip())
}

fn builtin(cfg: &Config, default: BuiltinData) -> Result<BuiltinData> {
    match &cfg.data {
        Some(name) => Ok(BuiltinData::from_name(name)?),
        None => Ok(default),
    }
}

fn data_1d(cfg: &Config, default: BuiltinData, basis: &EigenBasis) -> Result<(Vec<f64>, Vec<f64>)> {
    let (u0, u1) = match &cfg.data_file {
        Some(path) => {
            let (u0, u1) = read_nodes(path)?;
            if u0.len() != basis.rule().len() {
                return Err(CliError::Config(format!(
                    "{} holds {} nodes but order {} needs {}",
                    path.display(),
                    u0.len(),
                    basis.order(),
                    basis.rule().len()
                )));
            }
            interpolate_samples(&u0, &u1, basis.rule())?
        }
        None => builtin(cfg, default)?.nodes_1d(basis.rule())?,
    };
    if cfg.truncate {
        Ok(truncated_projection(&u0, &u1, basis, cfg.alpha)?)
    } else {
        Ok((u0, u1))
    }
}

struct Run1d {
    n: usize,
    controls: ControlSet,
    residual: f64,
    cg_iterations: usize,
    cg_residual: f64,
    converged: bool,
}

impl Run1d {
    fn status(&self) -> &'static str {
        if self.converged {
            CONVERGED
        } else {
            UNCONVERGED
        }
    }
}

fn solve_1d(cfg: &Config, n: usize, default: BuiltinData) -> Result<Run1d> {
    let basis = EigenBasis::for_order(n)?;
    let (u0, u1) = data_1d(cfg, default, &basis)?;
    let w = WeightFunction::new(cfg.t_final, cfg.delta)?;
    let grid = TimeGrid::new(cfg.t_final, cfg.dt)?;
    let solver = HumSolver::new(&basis, w);
    let (minimizer, controls, cg_iterations, cg_residual, converged) =
        match solver.solve(&u0, &u1, &grid, cfg.cg_tol, cfg.cg_max_iter) {
            Ok(s) => (
                s.minimizer,
                s.controls,
                s.cg_iterations,
                s.cg_residual,
                true,
            ),
            Err(HumError::NonConvergence {
                iterations,
                residual,
                best,
            }) => {
                log::warn!("N = {n}: CG stopped after {iterations} iterations at {residual:.2e}");
                let z = AdjointFinalData::from_flat(&best)?;
                let controls = extract_controls(&z, &w, &grid, &basis)?;
                (z, controls, iterations, residual, false)
            }
            Err(e) => return Err(e.into()),
        };
    let vgrid = TimeGrid::new(cfg.t_final, cfg.verify_dt)?;
    let vcontrols = if vgrid == grid {
        controls.clone()
    } else {
        extract_controls(&minimizer, &w, &vgrid, &basis)?
    };
    let shapes = control_shapes(basis.rule(), basis.diff());
    let op = assemble_laplacian(basis.rule(), basis.diff());
    let state = forward_solve((&u0, &u1), &vcontrols, &basis, &shapes, &op, &vgrid)?;
    let residual = final_residual(&state, basis.rule(), (&u0, &u1));
    log::info!("N = {n}: {cg_iterations} CG iterations, forward residual {residual:.2e}");
    Ok(Run1d {
        n,
        controls,
        residual,
        cg_iterations,
        cg_residual,
        converged,
    })
}

fn scan_1d(cfg: &Config, orders: &[usize], default: BuiltinData) -> Result<Vec<Run1d>> {
    par::map_slice(orders, |&n| solve_1d(cfg, n, default))
        .into_iter()
        .collect()
}

fn controls_table(run: &Run1d) -> Table {
    let mut t = Table::new(format!("controls_N{}", run.n), &["t", "f", "g_R", "g_L"]);
    let c = &run.controls;
    for (m, time) in c.grid.times().into_iter().enumerate() {
        t.push(vec![
            time.into(),
            c.f[m].into(),
            c.g_r[m].into(),
            c.g_l[m].into(),
        ]);
    }
    t
}

fn table_1d(cfg: &Config, default: BuiltinData) -> Result<Outcome> {
    let runs = scan_1d(cfg, &sorted(&cfg.orders), default)?;
    let mut table = Table::new(
        "controls_table",
        &[
            "N",
            "norm_f",
            "norm_gR",
            "norm_gL",
            "residual",
            "cg_iters",
            "cg_residual",
            "status",
        ],
    );
    let mut tables = Vec::new();
    for r in &runs {
        let nm = r.controls.norms();
        table.push(vec![
            r.n.into(),
            nm.f.into(),
            nm.g_r.into(),
            nm.g_l.into(),
            r.residual.into(),
            r.cg_iterations.into(),
            r.cg_residual.into(),
            r.status().into(),
        ]);
        if cfg.export_controls {
            tables.push(controls_table(r));
        }
    }
    tables.insert(0, table);
    Ok(Outcome {
        tables,
        unconverged: runs.iter().filter(|r| !r.converged).count(),
    })
}

fn convergence(cfg: &Config) -> Result<Outcome> {
    let orders = sorted(&cfg.orders);
    let mut all = orders.clone();
    all.push(cfg.n_ref);
    let mut runs = scan_1d(cfg, &sorted(&all), BuiltinData::Hat)?;
    let pos = runs
        .iter()
        .position(|r| r.n == cfg.n_ref)
        .expect("reference is in the scan");
    let reference = if orders.contains(&cfg.n_ref) {
        runs[pos].controls.clone()
    } else {
        runs.remove(pos).controls
    };
    let mut table = Table::new(
        "convergence_table",
        &[
            "N",
            "err_f",
            "log10_err_f",
            "residual",
            "cg_iters",
            "cg_residual",
            "status",
        ],
    );
    for r in &runs {
        let diff: Vec<f64> = r
            .controls
            .f
            .iter()
            .zip(&reference.f)
            .map(|(a, b)| a - b)
            .collect();
        let err = r.controls.grid.l2_norm(&diff);
        table.push(vec![
            r.n.into(),
            err.into(),
            err.log10().into(),
            r.residual.into(),
            r.cg_iterations.into(),
            r.cg_residual.into(),
            r.status().into(),
        ]);
    }
    let mut tables = vec![table];
    if cfg.export_controls {
        tables.extend(runs.iter().map(controls_table));
    }
    Ok(Outcome {
        tables,
        unconverged: runs.iter().filter(|r| !r.converged).count(),
    })
}

struct Run2d {
    n: (usize, usize),
    norms: hum_spectral::control2d::ControlNorms2D,
    profile: Vec<(f64, f64)>,
    residual: f64,
    cg_iterations: usize,
    cg_residual: f64,
    converged: bool,
}

fn solve_2d(cfg: &Config, (n1, n2): (usize, usize)) -> Result<Run2d> {
    let b1 = EigenBasis::for_order(n1)?;
    let b2 = EigenBasis::for_order(n2)?;
    let grid = Grid2D::new(b1.rule().clone(), b2.rule().clone())?;
    let basis = tensor_basis(&b1, &b2);
    let (u0, u1) =
        builtin(cfg, BuiltinData::Gaussian2d)?.nodes_2d(grid.rule_x1(), grid.rule_x2())?;
    let w = WeightFunction::new(cfg.t_final, cfg.delta)?;
    let tgrid = TimeGrid::new(cfg.t_final, cfg.dt)?;
    let solver = HumSolver2D::new(&grid, &basis, w);
    let split = |z: &[f64]| {
        let (k1, k2) = (basis.n1(), basis.n2());
        let n = k1 * k2;
        (
            DMatrix::from_fn(k1, k2, |k, m| z[k * k2 + m]),
            DMatrix::from_fn(k1, k2, |k, m| z[n + k * k2 + m]),
        )
    };
    let (c, d, controls, cg_iterations, cg_residual, converged) =
        match solver.solve(&u0, &u1, &tgrid, cfg.cg_tol, cfg.cg_max_iter) {
            Ok(s) => (s.c, s.d, s.controls, s.cg_iterations, s.cg_residual, true),
            Err(HumError::NonConvergence {
                iterations,
                residual,
                best,
            }) => {
                log::warn!(
                    "N = ({n1},{n2}): CG stopped after {iterations} iterations at {residual:.2e}"
                );
                let (c, d) = split(&best);
                let controls = extract_controls_2d(&c, &d, &w, &tgrid, &grid, &basis)?;
                (c, d, controls, iterations, residual, false)
            }
            Err(e) => return Err(e.into()),
        };
    let vgrid = TimeGrid::new(cfg.t_final, cfg.verify_dt)?;
    let vcontrols: ControlSet2D = if vgrid == tgrid {
        controls.clone()
    } else {
        extract_controls_2d(&c, &d, &w, &vgrid, &grid, &basis)?
    };
    let residual = forward_verify_2d((&u0, &u1), &vcontrols, &grid, &basis, &vgrid)?;
    log::info!("N = ({n1},{n2}): {cg_iterations} CG iterations, forward residual {residual:.2e}");
    let profile = tgrid
        .times()
        .into_iter()
        .zip(controls.f_profile(&grid))
        .collect();
    Ok(Run2d {
        n: (n1, n2),
        norms: controls.norms(&grid),
        profile,
        residual,
        cg_iterations,
        cg_residual,
        converged,
    })
}

fn square(cfg: &Config) -> Result<Outcome> {
    let mut orders = cfg.orders_2d.clone();
    orders.sort_unstable();
    orders.dedup();
    // each solve is internally parallel; run the sizes one after another
    let runs: Vec<Run2d> = orders
        .iter()
        .map(|&n| solve_2d(cfg, n))
        .collect::<Result<_>>()?;
    let mut table = Table::new(
        "controls_2d_table",
        &[
            "N1",
            "N2",
            "norm_f",
            "norm_g1",
            "norm_g2",
            "norm_g3",
            "norm_g4",
            "residual",
            "cg_iters",
            "cg_residual",
            "status",
        ],
    );
    let mut tables = Vec::new();
    for r in &runs {
        let mut row: Vec<Cell> = vec![r.n.0.into(), r.n.1.into(), r.norms.f.into()];
        row.extend(r.norms.g.iter().map(|&g| Cell::from(g)));
        row.extend([
            r.residual.into(),
            r.cg_iterations.into(),
            r.cg_residual.into(),
            (if r.converged { CONVERGED } else { UNCONVERGED }).into(),
        ]);
        table.push(row);
        let mut prof = Table::new(
            format!("time_profile_{}x{}", r.n.0, r.n.1),
            &["t", "f_norm_on_gamma"],
        );
        for &(t, v) in &r.profile {
            prof.push(vec![t.into(), v.into()]);
        }
        tables.push(prof);
    }
    tables.insert(0, table);
    Ok(Outcome {
        tables,
        unconverged: runs.iter().filter(|r| !r.converged).count(),
    })
}

fn spectra(cfg: &Config) -> Result<Outcome> {
    let orders = sorted(&cfg.orders);
    let bases: Vec<EigenBasis> = par::map_slice(&orders, |&n| EigenBasis::for_order(n))
        .into_iter()
        .collect::<hum_spectral::Result<_>>()?;
    let mut gaps = Table::new("spectra_gaps", &["N", "k", "gap"]);
    let mut quotients = Table::new(
        "spectra_quotients",
        &["N", "quotient_plain", "quotient_reinforced"],
    );
    let mut top = Vec::new();
    let mut plain = Vec::new();
    let mut reinforced = Vec::new();
    for (b, &n) in bases.iter().zip(&orders) {
        for (k, g) in gap_scan(b) {
            gaps.push(vec![n.into(), k.into(), g.into()]);
        }
        let p = observability_quotient(b, b.rule(), false).value;
        let r = observability_quotient(b, b.rule(), true).value;
        quotients.push(vec![n.into(), p.into(), r.into()]);
        if let Some((_, g)) = top_pair_gap(b) {
            top.push((n as f64, g));
        }
        plain.push((n as f64, p));
        reinforced.push((n as f64, r));
    }
    let mut fits = Table::new(
        "spectra_fits",
        &["quantity", "exponent", "prefactor", "r_squared"],
    );
    if orders.len() >= 3 {
        for (name, samples) in [
            ("top_pair_gap", &top),
            ("quotient_plain", &plain),
            ("quotient_reinforced", &reinforced),
        ] {
            let f = scaling_fit(samples)?;
            fits.push(vec![
                name.into(),
                f.exponent.into(),
                f.prefactor.into(),
                f.r_squared.into(),
            ]);
        }
    } else {
        log::warn!("fewer than 3 orders, no scaling fits");
    }
    Ok(Outcome {
        tables: vec![gaps, quotients, fits],
        unconverged: 0,
    })
}
