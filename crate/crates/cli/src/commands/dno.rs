use std::f64::consts::PI;
use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use capwave::dno::{dno_oracle_refined, dno_series, max_slope, self_adjoint_defect, symmetry_check, DnoConfig, SymmetryTransform};
use capwave::fit::loglog_fit;
use capwave::spectral::{gaussian, GridSpec, SpectralField};

use super::fit_rows;
use crate::config::{self, run_config, schema_version, GridConfig};
use crate::output::{col, Cell, PlotKind, Table};
use crate::{CliError, Run};

#[derive(Args, Debug)]
pub struct DnoArgs {
    /// JSON config; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Grid points per axis.
    #[arg(long)]
    pub n: Option<usize>,
    /// Oracle depth intervals.
    #[arg(long)]
    pub layers: Option<usize>,
    /// Comma-separated slopes `max |grad h|`.
    #[arg(long, value_delimiter = ',')]
    pub epsilons: Option<Vec<f64>>,
    /// Comma-separated series orders.
    #[arg(long, value_delimiter = ',')]
    pub orders: Option<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub center: [f64; 2],
    pub width: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DnoVerifyConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "d_grid")]
    pub grid: GridConfig,
    #[serde(default = "d_eps")]
    pub epsilons: Vec<f64>,
    #[serde(default = "d_orders")]
    pub orders: Vec<usize>,
    #[serde(default = "d_layers")]
    pub oracle_layers: usize,
    /// Defaults to `max(12, 3 L / 2 pi)`.
    #[serde(default)]
    pub oracle_depth: Option<f64>,
    /// Elevation shape before scaling to each slope.
    #[serde(default = "d_h")]
    pub h: Bump,
    #[serde(default = "d_f")]
    pub f: Bump,
    /// Allowed distance of each fitted slope from `order + 1`.
    #[serde(default = "d_tol")]
    pub slope_tolerance: f64,
}

fn d_grid() -> GridConfig {
    GridConfig { n: 64, box_length: 2.0 * PI }
}
fn d_eps() -> Vec<f64> {
    vec![0.1, 0.05, 0.025]
}
fn d_orders() -> Vec<usize> {
    vec![1, 2]
}
fn d_layers() -> usize {
    64
}
fn d_h() -> Bump {
    Bump { center: [0.3, -0.2], width: 0.6 }
}
fn d_f() -> Bump {
    Bump { center: [-0.4, 0.3], width: 0.7 }
}
fn d_tol() -> f64 {
    0.2
}

impl Default for DnoVerifyConfig {
    fn default() -> Self {
        Self {
            schema_version: schema_version(),
            seed: None,
            output_dir: None,
            grid: d_grid(),
            epsilons: d_eps(),
            orders: d_orders(),
            oracle_layers: d_layers(),
            oracle_depth: None,
            h: d_h(),
            f: d_f(),
            slope_tolerance: d_tol(),
        }
    }
}

run_config!(DnoVerifyConfig);

impl DnoVerifyConfig {
    fn dno(&self) -> DnoConfig {
        let mut c = DnoConfig { oracle_layers: self.oracle_layers, ..DnoConfig::default() };
        c.oracle_depth = self.oracle_depth.unwrap_or(c.oracle_depth.max(3.0 * self.grid.box_length / (2.0 * PI)));
        c
    }
}

pub fn resolve(a: &DnoArgs) -> Result<DnoVerifyConfig, CliError> {
    let mut cfg: DnoVerifyConfig = config::load_or_default(a.config.as_deref())?;
    if let Some(n) = a.n {
        cfg.grid.n = n;
    }
    if let Some(l) = a.layers {
        cfg.oracle_layers = l;
    }
    if let Some(e) = &a.epsilons {
        cfg.epsilons = e.clone();
    }
    if let Some(o) = &a.orders {
        cfg.orders = o.clone();
    }
    cfg.grid.spec()?;
    cfg.dno().validate(cfg.grid.box_length)?;
    cfg.oracle_depth = Some(cfg.dno().oracle_depth);
    if cfg.epsilons.len() < 2 || cfg.epsilons.iter().any(|&e| !(e > 0.0 && e < capwave::dno::SLOPE_GUARD)) {
        return Err(CliError::Config("need at least two epsilons in (0, 0.5)".into()));
    }
    if cfg.orders.is_empty() || cfg.orders.iter().any(|&o| o > capwave::dno::MAX_SERIES_ORDER) {
        return Err(CliError::Config("orders must be nonempty and at most 6".into()));
    }
    if !(cfg.h.width > 0.0 && cfg.f.width > 0.0) {
        return Err(CliError::Config("bump widths must be positive".into()));
    }
    Ok(cfg)
}

fn max_coeff_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn identities(grid: GridSpec, h: &SpectralField, f: &SpectralField, order: usize) -> Result<Vec<(String, f64, f64)>, CliError> {
    let mut out = Vec::new();
    let flat = dno_series(&SpectralField::zeros(grid), f, order)?;
    out.push(("flat_surface_exactness".into(), max_coeff_diff(&flat, &f.lambda_pow(1.0)), 1e-12));
    let g = gaussian(grid, [0.5, 0.1], 0.5, 1.0);
    out.push(("self_adjoint_defect".into(), self_adjoint_defect(h, f, &g, order)?, 1e-8));
    for (name, t, tol) in [
        ("translation_symmetry", SymmetryTransform::Translation(3, -5), 1e-10),
        ("rotation_symmetry", SymmetryTransform::Rotation(1), 1e-10),
        ("dilation_symmetry", SymmetryTransform::Dilation(2), 1e-8),
    ] {
        out.push((name.to_string(), symmetry_check(h, f, order, t)?, tol));
    }
    Ok(out)
}

pub fn run(_a: &DnoArgs, run: &mut Run) -> Result<(), CliError> {
    let cfg: DnoVerifyConfig = config::from_echo(&run.config)?;
    let grid = cfg.grid.spec()?;
    let dcfg = cfg.dno();
    let mut h0 = gaussian(grid, cfg.h.center, cfg.h.width, 1.0);
    h0.remove_mean();
    let s0 = max_slope(&h0);
    let f = gaussian(grid, cfg.f.center, cfg.f.width, 1.0);
    let shape = |eps: f64| h0.scale(eps / s0);

    // one oracle solve per slope, shared by all orders
    let errs: Vec<Vec<f64>> = cfg
        .epsilons
        .par_iter()
        .map(|&eps| -> Result<Vec<f64>, CliError> {
            let h = shape(eps);
            let oracle = dno_oracle_refined(&h, &f, &dcfg)?;
            let scale = oracle.l2_norm();
            cfg.orders
                .iter()
                .map(|&n| Ok((&dno_series(&h, &f, n)? - &oracle).l2_norm() / scale))
                .collect()
        })
        .collect::<Result<_, _>>()?;

    let mut table = Table::new(
        "convergence",
        vec![
            col("epsilon", "1", "max slope of h"),
            col("order", "1", "series order N"),
            col("series_vs_oracle_rel_err", "1", "relative l2 gap between series and elliptic solve"),
            col("slope_fit", "1", "log-log slope of the gap in epsilon"),
        ],
    );
    let mut slopes = Vec::new();
    let mut failures = Vec::new();
    for (oi, &order) in cfg.orders.iter().enumerate() {
        let ys: Vec<f64> = errs.iter().map(|e| e[oi]).collect();
        let fit = loglog_fit(&cfg.epsilons, &ys)?;
        let pts: Vec<(f64, f64)> = cfg.epsilons.iter().zip(&ys).map(|(x, y)| (x.ln(), y.ln())).collect();
        run.write_plot(&format!("order_fit_N{order}"), PlotKind::OrderFit, &fit_rows(&pts, fit.slope, fit.intercept))?;
        for (&eps, &err) in cfg.epsilons.iter().zip(&ys) {
            table.push(vec![eps.into(), order.into(), err.into(), fit.slope.into()]);
        }
        let target = (order + 1) as f64;
        let pass = (fit.slope - target).abs() <= cfg.slope_tolerance;
        if !pass {
            failures.push(format!("order {order}: slope {:.3} vs {target}", fit.slope));
        }
        slopes.push(json!({"order": order, "slope": fit.slope, "r_squared": fit.r_squared, "target": target, "pass": pass}));
    }
    run.write_table(&table)?;

    let top = *cfg.orders.iter().max().expect("nonempty");
    let eps_max = cfg.epsilons.iter().copied().fold(0.0, f64::max);
    let ids = identities(grid, &shape(eps_max), &f, top)?;
    let mut it = Table::new(
        "identities",
        vec![
            col("identity", "-", "identity of the DN series"),
            col("value", "1", "defect"),
            col("tolerance", "1", "allowed defect"),
            col("pass", "bool", "defect within tolerance"),
        ],
    );
    for (name, v, tol) in &ids {
        let pass = *v <= *tol;
        if !pass {
            failures.push(format!("{name}: {v:.3e} > {tol:.0e}"));
        }
        it.push(vec![Cell::from(name.as_str()), (*v).into(), (*tol).into(), pass.into()]);
    }
    run.write_table(&it)?;
    run.summary = json!({"slopes": slopes, "identities_pass": ids.iter().all(|(_, v, t)| v <= t)});
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Contract(failures.join("; ")))
    }
}
