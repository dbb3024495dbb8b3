use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use capwave::resonance::{cutoff_scan, resonant_sets, SearchConfig, SignPair, Vec2};

use crate::config::{self, run_config, schema_version};
use crate::output::{col, Cell, Table};
use crate::{CliError, Run};

#[derive(Args, Debug)]
pub struct ResonanceArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `all` or a comma-separated list of `++`, `+-`, `-+`, `--` (or `pp`, `pm`, `mp`, `mm`).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub signs: Option<Vec<String>>,
    /// Coarse scan points per axis of the `xi` box.
    #[arg(long)]
    pub scan_points: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "d_signs")]
    pub signs: Vec<SignPair>,
    #[serde(default = "d_xi_box")]
    pub xi_box: f64,
    #[serde(default = "d_scan")]
    pub scan_points: usize,
    #[serde(default = "d_angles")]
    pub eta_angles: usize,
    #[serde(default = "d_starts")]
    pub starts: usize,
    #[serde(default = "d_excl")]
    pub singular_exclusion: f64,
    #[serde(default = "d_zero")]
    pub zero_tol: f64,
    #[serde(default = "d_res")]
    pub resonant_tol: f64,
    /// Points per axis of the cutoff-support scan.
    #[serde(default = "d_cut")]
    pub cutoff_points: usize,
}

fn d_signs() -> Vec<SignPair> {
    SignPair::ALL.to_vec()
}
fn d_xi_box() -> f64 {
    SearchConfig::default().xi_box
}
fn d_scan() -> usize {
    SearchConfig::default().scan_points
}
fn d_angles() -> usize {
    SearchConfig::default().eta_angles
}
fn d_starts() -> usize {
    SearchConfig::default().starts
}
fn d_excl() -> f64 {
    SearchConfig::default().singular_exclusion
}
fn d_zero() -> f64 {
    SearchConfig::default().zero_tol
}
fn d_res() -> f64 {
    SearchConfig::default().resonant_tol
}
fn d_cut() -> usize {
    120
}

impl Default for ResonanceConfig {
    fn default() -> Self {
        config::parse(r#"{"schema_version": 1}"#, "defaults").expect("defaults deserialize")
    }
}

run_config!(ResonanceConfig);

pub fn resolve(a: &ResonanceArgs) -> Result<ResonanceConfig, CliError> {
    let mut cfg: ResonanceConfig = config::load_or_default(a.config.as_deref())?;
    if let Some(list) = &a.signs {
        cfg.signs = if list.iter().any(|s| s == "all") {
            SignPair::ALL.to_vec()
        } else {
            list.iter().map(|s| SignPair::parse(s)).collect::<Result<_, _>>()?
        };
    }
    if let Some(p) = a.scan_points {
        cfg.scan_points = p;
    }
    if cfg.signs.is_empty() || cfg.scan_points < 3 || cfg.starts == 0 || cfg.eta_angles == 0 || !(cfg.xi_box > 0.0) {
        return Err(CliError::Config("need signs, scan_points >= 3, starts, eta_angles >= 1 and xi_box > 0".into()));
    }
    Ok(cfg)
}

fn pair(v: Vec2) -> String {
    format!("{:.16e};{:.16e}", v[0], v[1])
}

pub fn run(_a: &ResonanceArgs, run: &mut Run) -> Result<(), CliError> {
    let cfg: ResonanceConfig = config::from_echo(&run.config)?;
    let search = SearchConfig {
        xi_box: cfg.xi_box,
        scan_points: cfg.scan_points,
        eta_angles: cfg.eta_angles,
        starts: cfg.starts,
        singular_exclusion: cfg.singular_exclusion,
        zero_tol: cfg.zero_tol,
        resonant_tol: cfg.resonant_tol,
        seed: run.seed,
    };
    let reports: Vec<_> = cfg.signs.par_iter().map(|&s| resonant_sets(s, &search)).collect();

    let mut sets = Table::new(
        "resonant_sets",
        vec![
            col("signs", "-", "phase sign pair"),
            col("set", "-", "T: phi = 0, S: grad_eta phi = 0, R: both"),
            col("residual", "1", "smallest normalized residual"),
            col("argmin_xi", "freq", "xi at the residual minimum"),
            col("argmin_eta", "freq", "eta at the residual minimum"),
            col("found", "bool", "residual below tolerance"),
            col("converged", "1", "converged searches"),
            col("candidate", "-", "closed-form description"),
            col("candidate_distance", "1", "largest distance of converged points from the candidate"),
        ],
    );
    let mut checks = Table::new(
        "resonance_checks",
        vec![
            col("signs", "-", "phase sign pair"),
            col("check", "-", "property of the resonant sets"),
            col("value", "1", "measured value"),
            col("bound", "1", "threshold"),
            col("pass", "bool", "check holds"),
        ],
    );
    let mut failures = Vec::new();
    for rep in &reports {
        for s in &rep.sets {
            sets.push(vec![
                rep.signs.label().into(),
                s.set.label().into(),
                s.residual.into(),
                pair(s.argmin_xi).into(),
                pair(s.argmin_eta).into(),
                s.found.into(),
                s.converged.into(),
                s.candidate.as_str().into(),
                s.candidate_distance.map_or(Cell::Text(String::new()), Cell::from),
            ]);
        }
        for c in &rep.checks {
            if !c.pass {
                failures.push(format!("{} {}: {:.3e} vs {:.3e}", rep.signs.label(), c.name, c.value, c.bound));
            }
            checks.push(vec![rep.signs.label().into(), c.name.as_str().into(), c.value.into(), c.bound.into(), c.pass.into()]);
        }
    }
    run.write_table(&sets)?;
    run.write_table(&checks)?;

    let cut = cutoff_scan(cfg.cutoff_points);
    let mut ct = Table::new(
        "cutoffs",
        vec![
            col("quantity", "-", "space-time cutoff property"),
            col("value", "1", "measured"),
        ],
    );
    ct.push(vec!["time_min_ratio".into(), cut.time_min_ratio.into()]);
    ct.push(vec!["time_bound".into(), cut.time_bound.into()]);
    ct.push(vec!["space_min_constant".into(), cut.space_min_constant.into()]);
    ct.push(vec!["partition_defect".into(), cut.partition_defect.into()]);
    ct.push(vec!["samples".into(), cut.samples.into()]);
    run.write_table(&ct)?;
    if cut.time_min_ratio < cut.time_bound - 1e-12 {
        failures.push(format!("time cutoff ratio {:.4} below {:.4}", cut.time_min_ratio, cut.time_bound));
    }

    run.summary = json!({
        "passed": failures.is_empty(),
        "signs": reports.iter().map(|r| json!({"signs": r.signs.label(), "passed": r.passed()})).collect::<Vec<_>>(),
        "cutoffs": cut,
    });
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Contract(failures.join("; ")))
    }
}
