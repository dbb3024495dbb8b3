use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::json;

use capwave::dno::SurfaceState;
use capwave::evolution::{self, DiagnosticParams, EvolutionConfig};
use capwave::spectral::io::{read_snapshot, write_snapshot};
use capwave::spectral::{gaussian, GridSpec, SpectralField};

use crate::config::{self, run_config, schema_version, GridConfig};
use crate::output::{col, Cell, PlotKind, Table};
use crate::{CliError, Run};

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// JSON run config.
    #[arg(long)]
    pub config: PathBuf,
    /// Also write binary snapshots of the initial and final fields.
    #[arg(long)]
    pub snapshots: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub grid: GridConfig,
    pub init: InitConfig,
    /// Defaults to `0.25 dx^{3/2}`.
    #[serde(default)]
    pub dt: Option<f64>,
    pub t_end: f64,
    #[serde(default = "d_order")]
    pub dno_order: usize,
    #[serde(rename = "K", default = "d_k")]
    pub k: usize,
    #[serde(default = "d_delta")]
    pub delta: f64,
    #[serde(default = "d_iota")]
    pub iota: f64,
    #[serde(default = "d_alpha")]
    pub alpha: f64,
    #[serde(default = "d_sample")]
    pub sample_every: usize,
    #[serde(default = "d_c")]
    pub surface_tension: f64,
    #[serde(default = "d_true")]
    pub nonlinear: bool,
    #[serde(default = "d_true")]
    pub enforce_horizon: bool,
    #[serde(default)]
    pub snapshots: bool,
}

fn d_order() -> usize {
    2
}
fn d_k() -> usize {
    2
}
fn d_delta() -> f64 {
    0.01
}
fn d_iota() -> f64 {
    0.05
}
fn d_alpha() -> f64 {
    0.2
}
fn d_sample() -> usize {
    100
}
fn d_c() -> f64 {
    2.0
}
fn d_true() -> bool {
    true
}

run_config!(SimulateConfig);

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitConfig {
    /// `h = amplitude exp(-|x - center|^2 / 2 width^2)`, `psi = psi_amplitude` times the same bump.
    Gaussian {
        #[serde(default)]
        center: [f64; 2],
        width: f64,
        amplitude: f64,
        #[serde(default)]
        psi_amplitude: f64,
    },
    /// `h = amplitude cos(k.x + phase)` with `k = 2 pi m / L`, `psi = 0`.
    Mode {
        m: [i64; 2],
        amplitude: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Snapshot stems (`<stem>.json` + `<stem>.bin`); `psi` defaults to zero.
    File {
        h: PathBuf,
        #[serde(default)]
        psi: Option<PathBuf>,
    },
}

pub fn resolve(a: &SimulateArgs) -> Result<SimulateConfig, CliError> {
    let mut cfg: SimulateConfig = config::load(&a.config)?;
    cfg.snapshots |= a.snapshots;
    let grid = cfg.grid.spec()?;
    if cfg.dt.is_none() {
        cfg.dt = Some(evolution::default_dt(&grid));
    }
    if let InitConfig::File { h, psi } = &mut cfg.init {
        // relative stems are taken relative to the config file
        let base = a.config.parent().unwrap_or(Path::new("."));
        for p in std::iter::once(h).chain(psi.as_mut()) {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
    evolution_config(&cfg)?.validate(&grid)?;
    Ok(cfg)
}

fn evolution_config(cfg: &SimulateConfig) -> Result<EvolutionConfig, CliError> {
    let grid = cfg.grid.spec()?;
    let mut e = EvolutionConfig::new(&grid, cfg.t_end);
    e.dt = cfg.dt.unwrap_or(e.dt);
    e.dno_order = cfg.dno_order;
    e.c_surface_tension = cfg.surface_tension;
    e.sample_every = cfg.sample_every;
    e.nonlinear = cfg.nonlinear;
    e.enforce_horizon = cfg.enforce_horizon;
    e.diagnostic_params = DiagnosticParams::with(cfg.k, cfg.delta, cfg.alpha, cfg.iota);
    Ok(e)
}

fn snapshot_field(stem: &Path, grid: &GridSpec) -> Result<SpectralField, CliError> {
    let (header, f) = read_snapshot(stem).map_err(|e| CliError::Config(format!("{}: {e}", stem.display())))?;
    if header.n != grid.n() || (header.box_length - grid.box_length()).abs() > 1e-12 * grid.box_length() {
        return Err(CliError::Config(format!(
            "{}: snapshot grid n = {}, L = {} differs from the config grid",
            stem.display(),
            header.n,
            header.box_length
        )));
    }
    Ok(f)
}

pub fn initial_state(cfg: &SimulateConfig) -> Result<SurfaceState, CliError> {
    let grid = cfg.grid.spec()?;
    let (h, psi) = match &cfg.init {
        InitConfig::Gaussian { center, width, amplitude, psi_amplitude } => {
            if !(*width > 0.0) {
                return Err(CliError::Config("gaussian width must be positive".into()));
            }
            (gaussian(grid, *center, *width, *amplitude), gaussian(grid, *center, *width, *psi_amplitude))
        }
        InitConfig::Mode { m, amplitude, phase } => {
            let k = [2.0 * PI * m[0] as f64 / grid.box_length(), 2.0 * PI * m[1] as f64 / grid.box_length()];
            let (a, ph) = (*amplitude, *phase);
            (SpectralField::from_fn(grid, move |x, y| a * (k[0] * x + k[1] * y + ph).cos()), SpectralField::zeros(grid))
        }
        InitConfig::File { h, psi } => {
            let hf = snapshot_field(h, &grid)?;
            let pf = match psi {
                Some(p) => snapshot_field(p, &grid)?,
                None => SpectralField::zeros(grid),
            };
            (hf, pf)
        }
    };
    SurfaceState::new(h, psi, 0.0).map_err(|e| CliError::Config(e.to_string()))
}

/// Writes `<dir>/<name>.{json,bin}` through temporary stems.
fn snapshot(run: &mut Run, name: &str, time: f64, f: &SpectralField) -> Result<(), CliError> {
    let dir = run.dir.join("snapshots");
    std::fs::create_dir_all(&dir)?;
    let tmp = dir.join(format!(".{name}.partial"));
    write_snapshot(&tmp, name, time, f)?;
    for ext in ["json", "bin"] {
        let dst = dir.join(format!("{name}.{ext}"));
        std::fs::rename(tmp.with_extension(ext), &dst)?;
        run.record(&dst);
    }
    Ok(())
}

pub fn run(_a: &SimulateArgs, run: &mut Run) -> Result<(), CliError> {
    let cfg: SimulateConfig = config::from_echo(&run.config)?;
    let ecfg = evolution_config(&cfg)?;
    let init = initial_state(&cfg)?;
    if cfg.snapshots {
        snapshot(run, "h_initial", 0.0, &init.h)?;
        snapshot(run, "psi_initial", 0.0, &init.psi)?;
    }
    let out = evolution::run(&init, &ecfg)?;
    let first = out.samples.first().ok_or_else(|| CliError::Numerical("run produced no samples".into()))?;
    let e0 = first.energy;

    let mut cols = vec![col("t", "time", "time"), col("E_physical", "energy", "physical energy")];
    cols.push(col("E_drift", "1", "relative energy drift"));
    for (s, _) in &first.hs_norms {
        cols.push(col(format!("Hs_norm_s{s}"), "norm", "Sobolev norm of Lambda^1/2 u"));
    }
    cols.push(col("energy_norm", "norm", "vector-field energy norm"));
    for j in 0..first.energy_norm_terms.len() {
        cols.push(col(format!("Wkp_norm_j{j}"), "norm", "energy norm term with j vector fields"));
    }
    for s in &first.sup_norms {
        cols.push(col(format!("sup_norm_beta{}", s.beta), "norm", "sup norm of Y(D) Lambda^(1/2+alpha-beta) u"));
        cols.push(col(format!("sup_weighted_beta{}", s.beta), "norm", "time-weighted sup norm"));
    }
    cols.push(col("margin_warning", "1", "l2 mass fraction near the box edge"));
    cols.push(col("horizon_flag", "bool", "past the box-exit horizon"));
    let mut table = Table::new("diagnostics", cols);
    let mut drift_rows = Vec::new();
    let mut max_drift: f64 = 0.0;
    for r in &out.samples {
        let drift = if e0 != 0.0 { (r.energy - e0).abs() / e0.abs() } else { (r.energy - e0).abs() };
        max_drift = max_drift.max(drift);
        drift_rows.push(vec![r.time, drift]);
        let mut row: Vec<Cell> = vec![r.time.into(), r.energy.into(), drift.into()];
        row.extend(r.hs_norms.iter().map(|&(_, v)| Cell::from(v)));
        row.push(r.energy_norm.into());
        row.extend(r.energy_norm_terms.iter().map(|&v| Cell::from(v)));
        for s in &r.sup_norms {
            row.push(s.value.into());
            row.push(s.weighted.into());
        }
        row.push(r.margin_warning.map_or(Cell::Text(String::new()), Cell::from));
        row.push(r.horizon_flag.into());
        table.push(row);
    }
    run.write_table(&table)?;
    run.write_plot("energy_drift", PlotKind::EnergyDrift, &drift_rows)?;
    let final_time = out.samples.last().map_or(0.0, |r| r.time);
    if cfg.snapshots {
        snapshot(run, "h_final", final_time, &out.final_state.h)?;
        snapshot(run, "psi_final", final_time, &out.final_state.psi)?;
    }
    run.summary = json!({
        "steps": out.steps,
        "final_time": final_time,
        "horizon": out.horizon,
        "horizon_exceeded": out.horizon_exceeded,
        "max_relative_drift": max_drift,
        "max_reality_correction": out.max_correction,
        "aborted": out.aborted,
    });
    match &out.aborted {
        Some(reason) => Err(CliError::Numerical(format!("run stopped at t = {final_time}: {reason}"))),
        None => Ok(()),
    }
}
