use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use capwave::resonance::{declared_symbols, symbol_by_name, vanishing_order_fit, Regime};

use super::fit_rows;
use crate::config::{self, run_config, schema_version};
use crate::output::{col, Cell, PlotKind, Table};
use crate::{CliError, Run};

#[derive(Args, Debug)]
pub struct SymbolOrderArgs {
    /// Symbol name (`m1`, `m2`, `m_pp`, `normal_form_pp`, `eta_ibp_pm`, ...) or `all`.
    #[arg(long, default_value = "all")]
    pub symbol: String,
    /// `xi_small`, `eta_small`, `diff_small` or `all`.
    #[arg(long, default_value = "all")]
    pub regime: String,
    /// Decades of the small parameter below 0.1.
    #[arg(long, default_value_t = 4)]
    pub decades: usize,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolOrderConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub symbols: Vec<String>,
    pub regimes: Vec<Regime>,
    pub decades: usize,
}

run_config!(SymbolOrderConfig);

pub fn resolve(a: &SymbolOrderArgs) -> Result<SymbolOrderConfig, CliError> {
    let symbols = if a.symbol == "all" {
        declared_symbols().into_iter().map(|s| s.name).collect()
    } else {
        symbol_by_name(&a.symbol)?;
        vec![a.symbol.clone()]
    };
    let regimes = if a.regime == "all" { Regime::ALL.to_vec() } else { vec![Regime::parse(&a.regime)?] };
    if a.decades < 3 {
        return Err(CliError::Config("decades must be at least 3".into()));
    }
    Ok(SymbolOrderConfig { schema_version: schema_version(), seed: None, output_dir: None, symbols, regimes, decades: a.decades })
}

pub fn run(_a: &SymbolOrderArgs, run: &mut Run) -> Result<(), CliError> {
    let cfg: SymbolOrderConfig = config::from_echo(&run.config)?;
    let jobs: Vec<(String, Regime)> =
        cfg.symbols.iter().flat_map(|s| cfg.regimes.iter().map(move |&r| (s.clone(), r))).collect();
    let fits = jobs
        .par_iter()
        .map(|(name, regime)| Ok(vanishing_order_fit(&symbol_by_name(name)?, *regime, cfg.decades)?))
        .collect::<Result<Vec<_>, CliError>>()?;

    let mut table = Table::new(
        "symbol_order",
        vec![
            col("symbol", "-", "bilinear symbol"),
            col("regime", "-", "which frequency is small"),
            col("slope", "1", "fitted vanishing order"),
            col("r_squared", "1", "fit quality"),
            col("n_samples", "1", "points in the fit"),
            col("declared", "1", "declared vanishing order"),
            col("meets_class", "bool", "slope >= declared - 0.1"),
        ],
    );
    let mut failures = Vec::new();
    for f in &fits {
        table.push(vec![
            f.symbol.as_str().into(),
            f.regime.label().into(),
            f.slope.into(),
            f.r_squared.into(),
            f.n_samples.into(),
            f.declared.map_or(Cell::Text(String::new()), Cell::from),
            f.meets_class().into(),
        ]);
        if !f.meets_class() {
            failures.push(format!("{} {}: {:.3} < {:?}", f.symbol, f.regime.label(), f.slope, f.declared));
        }
        if let Some(line) = &f.line {
            let stem = format!("order_fit_{}_{}", f.symbol, f.regime.label());
            run.write_plot(&stem, PlotKind::OrderFit, &fit_rows(&f.points, line.slope, line.intercept))?;
        }
    }
    run.write_table(&table)?;
    run.summary = json!({
        "fits": fits.len(),
        "all_meet_class": failures.is_empty(),
    });
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Contract(failures.join("; ")))
    }
}
