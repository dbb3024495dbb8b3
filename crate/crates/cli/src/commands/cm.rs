use std::f64::consts::PI;
use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use capwave::pseudo_product::{cm_bound_probe, CmProbeConfig};
use capwave::resonance::symbol_by_name;

use crate::config::{self, norm_exponent, run_config, schema_version, GridConfig};
use crate::output::{col, Table};
use crate::{CliError, Run};

#[derive(Args, Debug)]
pub struct CmArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub symbol: Option<String>,
    /// Output norm exponent, `2` or `inf`; with `--q` and `--r` replaces the config triples.
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub q: Option<String>,
    #[arg(long)]
    pub r: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Box length.
    #[arg(long = "box")]
    pub box_length: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub j_min: Option<i32>,
    #[arg(long, allow_hyphen_values = true)]
    pub j_max: Option<i32>,
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CmConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "d_symbol")]
    pub symbol: String,
    /// `[p, q, r]` triples with `1/p = 1/q + 1/r`.
    #[serde(default = "d_exponents")]
    pub exponents: Vec<[String; 3]>,
    #[serde(default = "d_grid")]
    pub grid: GridConfig,
    #[serde(default = "d_jmin")]
    pub j_min: i32,
    #[serde(default = "d_jmax")]
    pub j_max: i32,
    #[serde(default = "d_trials")]
    pub trials: usize,
    /// Largest accepted `log2` trend of the max ratio per level.
    #[serde(default = "d_trend")]
    pub trend_tolerance: f64,
}

fn d_symbol() -> String {
    "m2".into()
}
fn d_exponents() -> Vec<[String; 3]> {
    vec![["2".into(), "2".into(), "inf".into()], ["2".into(), "inf".into(), "2".into()]]
}
fn d_grid() -> GridConfig {
    GridConfig { n: 32, box_length: 8.0 * PI }
}
fn d_jmin() -> i32 {
    -2
}
fn d_jmax() -> i32 {
    1
}
fn d_trials() -> usize {
    64
}
fn d_trend() -> f64 {
    0.1
}

impl Default for CmConfig {
    fn default() -> Self {
        config::parse(r#"{"schema_version": 1}"#, "defaults").expect("defaults deserialize")
    }
}

run_config!(CmConfig);

pub fn resolve(a: &CmArgs) -> Result<CmConfig, CliError> {
    let mut cfg: CmConfig = config::load_or_default(a.config.as_deref())?;
    if let Some(s) = &a.symbol {
        cfg.symbol = s.clone();
    }
    match (&a.p, &a.q, &a.r) {
        (None, None, None) => {}
        (Some(p), Some(q), Some(r)) => cfg.exponents = vec![[p.clone(), q.clone(), r.clone()]],
        _ => return Err(CliError::Config("--p, --q and --r go together".into())),
    }
    if let Some(n) = a.n {
        cfg.grid.n = n;
    }
    if let Some(l) = a.box_length {
        cfg.grid.box_length = l;
    }
    cfg.j_min = a.j_min.unwrap_or(cfg.j_min);
    cfg.j_max = a.j_max.unwrap_or(cfg.j_max);
    cfg.trials = a.trials.unwrap_or(cfg.trials);
    symbol_by_name(&cfg.symbol)?;
    cfg.grid.spec()?;
    if cfg.exponents.is_empty() || cfg.j_max < cfg.j_min || cfg.trials == 0 {
        return Err(CliError::Config("need exponents, j_min <= j_max and trials >= 1".into()));
    }
    for e in &cfg.exponents {
        for s in e {
            norm_exponent(s)?;
        }
    }
    Ok(cfg)
}

pub fn run(_a: &CmArgs, run: &mut Run) -> Result<(), CliError> {
    let cfg: CmConfig = config::from_echo(&run.config)?;
    let grid = cfg.grid.spec()?;
    let symbol = symbol_by_name(&cfg.symbol)?;
    let seed = run.seed;
    let reports = cfg
        .exponents
        .par_iter()
        .map(|[p, q, r]| {
            let pc = CmProbeConfig {
                j_min: cfg.j_min,
                j_max: cfg.j_max,
                p: norm_exponent(p)?,
                q: norm_exponent(q)?,
                r: norm_exponent(r)?,
                trials: cfg.trials,
                seed,
            };
            Ok(cm_bound_probe(&symbol, grid, &pc)?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let mut table = Table::new(
        "cm_probe",
        vec![
            col("j", "1", "dyadic level"),
            col("p", "-", "output Lebesgue exponent"),
            col("q", "-", "first input exponent"),
            col("r", "-", "second input exponent"),
            col("max_ratio", "1", "largest bound ratio over trials"),
            col("mean_ratio", "1", "mean bound ratio over trials"),
            col("trend_slope", "1", "log2 slope of max_ratio in j"),
        ],
    );
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for rep in &reports {
        for row in &rep.rows {
            table.push(vec![
                row.j.into(),
                rep.p.into(),
                rep.q.into(),
                rep.r.into(),
                row.max_ratio.into(),
                row.mean_ratio.into(),
                rep.trend_slope.into(),
            ]);
        }
        let pass = rep.trend_slope <= cfg.trend_tolerance;
        if !pass {
            failures.push(format!("({}, {}, {}): trend {:.3}", rep.p, rep.q, rep.r, rep.trend_slope));
        }
        summary.push(json!({"p": rep.p, "q": rep.q, "r": rep.r, "trend_slope": rep.trend_slope, "levels": rep.rows.len(), "pass": pass}));
    }
    run.write_table(&table)?;
    run.summary = json!({"symbol": symbol.name, "probes": summary});
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Contract(failures.join("; ")))
    }
}
