//! Flat TOML configuration with command-line overrides.

use std::path::{Path, PathBuf};

use clap::Parser;
use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    GaussianTable,
    HatTable,
    Convergence,
    Square,
    Spectra,
}

impl Experiment {
    fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "exp1-gaussian" => Experiment::GaussianTable,
            "exp1-hat" => Experiment::HatTable,
            "exp2" => Experiment::Convergence,
            "exp3" => Experiment::Square,
            "spectra" => Experiment::Spectra,
            other => {
                return Err(CliError::Config(format!(
                    "unknown experiment '{other}' (exp1-gaussian, exp1-hat, exp2, exp3, spectra)"
                )))
            }
        })
    }

    fn default_orders(self) -> Vec<usize> {
        match self {
            Experiment::GaussianTable | Experiment::HatTable => vec![20, 50, 100, 200],
            Experiment::Convergence => vec![10, 50, 100],
            Experiment::Square => Vec::new(),
            Experiment::Spectra => vec![16, 32, 64, 128],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub experiment: Option<String>,
    pub n: Option<Vec<usize>>,
    pub n2: Option<Vec<[usize; 2]>>,
    pub t_final: Option<f64>,
    pub dt: Option<f64>,
    pub delta: Option<f64>,
    pub cg_tol: Option<f64>,
    pub cg_max_iter: Option<usize>,
    pub alpha: Option<f64>,
    pub truncate: Option<bool>,
    pub n_ref: Option<usize>,
    pub verify_dt: Option<f64>,
    pub data: Option<String>,
    pub data_file: Option<PathBuf>,
    pub export_controls: Option<bool>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<String>,
}

/// Runs the numerical experiments; every flag overrides the config file.
#[derive(Debug, Parser, Default)]
#[command(name = "humctl", version)]
pub struct Args {
    /// TOML file with flat keys named like the long flags (underscores).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// exp1-gaussian, exp1-hat, exp2, exp3 or spectra.
    #[arg(long)]
    pub experiment: Option<String>,
    /// Polynomial orders, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// 2-d orders as N1xN2, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub n2: Option<Vec<String>>,
    #[arg(long)]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Cutoff ramp width.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub cg_tol: Option<f64>,
    #[arg(long)]
    pub cg_max_iter: Option<usize>,
    /// Truncation constant in r(N) = alpha N^(1/8).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Project 1-d data on the first r(N) modes before solving.
    #[arg(long)]
    pub truncate: Option<bool>,
    /// Reference order for exp2.
    #[arg(long)]
    pub n_ref: Option<usize>,
    /// Time step of the forward check (defaults to dt).
    #[arg(long)]
    pub verify_dt: Option<f64>,
    /// Built-in data set: gaussian-bump, hat, gaussian-2d.
    #[arg(long)]
    pub data: Option<String>,
    /// CSV with columns u0,u1 holding node values (1-d, single order).
    #[arg(long)]
    pub data_file: Option<PathBuf>,
    /// Also write (t, f, g_R, g_L) per order.
    #[arg(long)]
    pub export_controls: Option<bool>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Config {
    pub experiment: Experiment,
    pub orders: Vec<usize>,
    pub orders_2d: Vec<(usize, usize)>,
    pub t_final: f64,
    pub dt: f64,
    pub delta: f64,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    pub alpha: f64,
    pub truncate: bool,
    pub n_ref: usize,
    pub verify_dt: f64,
    pub data: Option<String>,
    pub data_file: Option<PathBuf>,
    pub export_controls: bool,
    pub out_dir: PathBuf,
    pub format: Format,
}

fn parse_pair(s: &str) -> Result<(usize, usize)> {
    let bad = || CliError::Config(format!("expected N1xN2, got '{s}'"));
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Config(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

pub fn read_file(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(toml::from_str(&text)?)
}

impl Config {
    pub fn resolve(args: Args) -> Result<Self> {
        let file = match &args.config {
            Some(p) => read_file(p)?,
            None => FileConfig::default(),
        };
        let name = args
            .experiment
            .or(file.experiment)
            .ok_or_else(|| CliError::Config("no experiment given".into()))?;
        let experiment = Experiment::parse(&name)?;
        let orders = args
            .n
            .or(file.n)
            .unwrap_or_else(|| experiment.default_orders());
        let orders_2d = match args.n2 {
            Some(v) => v
                .iter()
                .map(|s| parse_pair(s))
                .collect::<Result<Vec<_>>>()?,
            None => file
                .n2
                .map(|v| v.into_iter().map(|[a, b]| (a, b)).collect())
                .unwrap_or_else(|| vec![(20, 20), (50, 50)]),
        };
        let t_final = positive("t_final", args.t_final.or(file.t_final).unwrap_or(4.4))?;
        let dt = positive("dt", args.dt.or(file.dt).unwrap_or(1e-2))?;
        let format = match args.format.or(file.format).as_deref().unwrap_or("csv") {
            "csv" => Format::Csv,
            "json" => Format::Json,
            other => return Err(CliError::Config(format!("unknown format '{other}'"))),
        };
        let cfg = Config {
            experiment,
            orders,
            orders_2d,
            t_final,
            dt,
            delta: positive("delta", args.delta.or(file.delta).unwrap_or(0.1))?,
            cg_tol: positive("cg_tol", args.cg_tol.or(file.cg_tol).unwrap_or(1e-10))?,
            cg_max_iter: args.cg_max_iter.or(file.cg_max_iter).unwrap_or(5000),
            alpha: args.alpha.or(file.alpha).unwrap_or(0.6),
            truncate: args.truncate.or(file.truncate).unwrap_or(false),
            n_ref: args.n_ref.or(file.n_ref).unwrap_or(200),
            verify_dt: positive("verify_dt", args.verify_dt.or(file.verify_dt).unwrap_or(dt))?,
            data: args.data.or(file.data),
            data_file: args.data_file.or(file.data_file),
            export_controls: args
                .export_controls
                .or(file.export_controls)
                .unwrap_or(false),
            out_dir: args
                .out_dir
                .or(file.out_dir)
                .unwrap_or_else(|| PathBuf::from("out")),
            format,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let is_2d = self.experiment == Experiment::Square;
        if is_2d && self.orders_2d.is_empty() || !is_2d && self.orders.is_empty() {
            return Err(CliError::Config("empty list of orders".into()));
        }
        let mut small = self
            .orders
            .iter()
            .chain(self.orders_2d.iter().flat_map(|(a, b)| [a, b]));
        if let Some(n) = small.find(|&&n| n < 3) {
            return Err(CliError::Config(format!(
                "order {n} is too small, need at least 3"
            )));
        }
        if self.experiment == Experiment::Convergence && self.n_ref < 3 {
            return Err(CliError::Config("n_ref must be at least 3".into()));
        }
        if self.cg_max_iter == 0 {
            return Err(CliError::Config("cg_max_iter must be positive".into()));
        }
        if self.data_file.is_some() && self.data.is_some() {
            return Err(CliError::Config(
                "give either data or data_file, not both".into(),
            ));
        }
        if self.data_file.is_some() && (is_2d || self.experiment == Experiment::Spectra) {
            return Err(CliError::Config(
                "data_file is only supported for 1-d experiments".into(),
            ));
        }
        Ok(())
    }
}
