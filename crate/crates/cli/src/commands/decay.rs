use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use capwave::dispersive::{
    circular_harmonics, gaussian_transform, sup_norm_decay, uniform_nodes, FourierInput, HarmonicDecomposition, RScan,
};
use capwave::spectral::io::read_snapshot;

use crate::config::{self, run_config, schema_version};
use crate::output::{col, PlotKind, Table};
use crate::{CliError, Run};

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum DataKind {
    Bump,
    Family,
}

#[derive(Args, Debug)]
pub struct DecayArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated weights `beta` in `[0, 1/2]`.
    #[arg(long, value_delimiter = ',')]
    pub beta: Option<Vec<f64>>,
    /// Gaussian bump, or the inverse-power family matched to each `beta`.
    #[arg(long, value_enum)]
    pub data: Option<DataKind>,
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long)]
    pub iota: Option<f64>,
    #[arg(long)]
    pub t_min: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub n_times: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileConfig {
    /// `amplitude exp(-|x|^2 / 2 width^2)`.
    Bump {
        width: f64,
        #[serde(default = "d_one")]
        amplitude: f64,
        #[serde(default = "d_nodes")]
        nodes: usize,
    },
    /// `|xi|^{2 iota - 1/2 - beta}` times the bump transform, one member per `beta`.
    Family {
        width: f64,
        #[serde(default = "d_nodes")]
        nodes: usize,
    },
    /// A field snapshot stem, expanded in circular harmonics up to `m_max`.
    File {
        path: PathBuf,
        #[serde(default = "d_mmax")]
        m_max: i32,
        #[serde(default = "d_file_nodes")]
        nodes: usize,
    },
}

fn d_one() -> f64 {
    1.0
}
fn d_nodes() -> usize {
    2400
}
fn d_mmax() -> i32 {
    16
}
fn d_file_nodes() -> usize {
    400
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_min: f64,
    pub t_max: f64,
    /// Log-spaced points including both ends.
    pub count: usize,
}

impl TimeGrid {
    fn times(&self) -> Vec<f64> {
        let r = (self.t_max / self.t_min).ln();
        (0..self.count).map(|k| self.t_min * (r * k as f64 / (self.count - 1) as f64).exp()).collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub samples: usize,
    pub speed_factor: f64,
    pub offset: f64,
    pub angles: usize,
    pub refine: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        let s = RScan::default();
        Self { samples: s.samples, speed_factor: s.speed_factor, offset: s.offset, angles: s.angles, refine: s.refine }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "d_profile")]
    pub profile: ProfileConfig,
    #[serde(default = "d_tgrid")]
    pub t_grid: TimeGrid,
    #[serde(default)]
    pub r_scan: ScanConfig,
    #[serde(default = "d_betas")]
    pub beta_list: Vec<f64>,
    #[serde(default = "d_iota")]
    pub iota: f64,
}

fn d_profile() -> ProfileConfig {
    ProfileConfig::Family { width: 1.0, nodes: d_nodes() }
}
fn d_tgrid() -> TimeGrid {
    TimeGrid { t_min: 1.0, t_max: 100.0, count: 9 }
}
fn d_betas() -> Vec<f64> {
    vec![0.0, 0.5]
}
fn d_iota() -> f64 {
    0.05
}

impl Default for DecayConfig {
    fn default() -> Self {
        config::parse(r#"{"schema_version": 1}"#, "defaults").expect("defaults deserialize")
    }
}

run_config!(DecayConfig);

pub fn resolve(a: &DecayArgs) -> Result<DecayConfig, CliError> {
    let mut cfg: DecayConfig = config::load_or_default(a.config.as_deref())?;
    if let Some(b) = &a.beta {
        cfg.beta_list = b.clone();
    }
    let width = a.width.unwrap_or(match &cfg.profile {
        ProfileConfig::Bump { width, .. } | ProfileConfig::Family { width, .. } => *width,
        ProfileConfig::File { .. } => 1.0,
    });
    match a.data {
        Some(DataKind::Bump) => cfg.profile = ProfileConfig::Bump { width, amplitude: 1.0, nodes: d_nodes() },
        Some(DataKind::Family) => cfg.profile = ProfileConfig::Family { width, nodes: d_nodes() },
        None => match &mut cfg.profile {
            ProfileConfig::Bump { width: w, .. } | ProfileConfig::Family { width: w, .. } => *w = width,
            ProfileConfig::File { .. } => {}
        },
    }
    cfg.iota = a.iota.unwrap_or(cfg.iota);
    cfg.t_grid.t_min = a.t_min.unwrap_or(cfg.t_grid.t_min);
    cfg.t_grid.t_max = a.t_max.unwrap_or(cfg.t_grid.t_max);
    cfg.t_grid.count = a.n_times.unwrap_or(cfg.t_grid.count);
    let t = &cfg.t_grid;
    if !(t.t_min >= 1.0 && t.t_max > t.t_min && t.count >= 2) {
        return Err(CliError::Config("t_grid needs 1 <= t_min < t_max and count >= 2".into()));
    }
    if cfg.beta_list.is_empty() || cfg.beta_list.iter().any(|b| !(0.0..=0.5).contains(b)) {
        return Err(CliError::Config("beta_list must be nonempty with entries in [0, 1/2]".into()));
    }
    if !(cfg.iota > 0.0) || !(width > 0.0) {
        return Err(CliError::Config("iota and width must be positive".into()));
    }
    let s = &cfg.r_scan;
    if s.samples < 4 || s.angles == 0 || !(s.speed_factor > 0.0) {
        return Err(CliError::Config("r_scan needs samples >= 4, angles >= 1, speed_factor > 0".into()));
    }
    Ok(cfg)
}

fn decomposition(p: &ProfileConfig, beta: f64, iota: f64) -> Result<HarmonicDecomposition, CliError> {
    Ok(match p {
        ProfileConfig::Bump { width, amplitude, nodes } => {
            let input = FourierInput::analytic(gaussian_transform(*width, *amplitude));
            circular_harmonics(&input, 0, &uniform_nodes(12.0 / width, *nodes))?
        }
        ProfileConfig::Family { width, nodes } => {
            let input = FourierInput::analytic_with_power(2.0 * iota - 0.5 - beta, gaussian_transform(*width, 1.0));
            circular_harmonics(&input, 0, &uniform_nodes(12.0 / width, *nodes))?
        }
        ProfileConfig::File { path, m_max, nodes } => {
            let (_, f) = read_snapshot(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let kmax = f.grid().k_nyquist();
            circular_harmonics(&FourierInput::Grid(f), *m_max, &uniform_nodes(kmax, *nodes))?
        }
    })
}

pub fn run(_a: &DecayArgs, run: &mut Run) -> Result<(), CliError> {
    let cfg: DecayConfig = config::from_echo(&run.config)?;
    let times = cfg.t_grid.times();
    let s = &cfg.r_scan;
    let scan = RScan { samples: s.samples, speed_factor: s.speed_factor, offset: s.offset, angles: s.angles, refine: s.refine };
    let shared = match cfg.profile {
        ProfileConfig::Family { .. } => None,
        _ => Some(decomposition(&cfg.profile, 0.0, cfg.iota)?),
    };
    let reports = cfg
        .beta_list
        .par_iter()
        .map(|&beta| {
            let own;
            let d = match &shared {
                Some(d) => d,
                None => {
                    own = decomposition(&cfg.profile, beta, cfg.iota)?;
                    &own
                }
            };
            Ok(sup_norm_decay(d, &times, &scan, beta, cfg.iota)?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let mut table = Table::new(
        "decay",
        vec![
            col("beta", "1", "frequency weight exponent"),
            col("t", "time", "time"),
            col("sup_norm", "amplitude", "sup of the linear flow"),
            col("argmax_r", "length", "radius of the supremum"),
            col("rhs_norm", "norm", "weighted vector-field norm of the data"),
            col("ratio", "1", "sup t^(1 - 2 beta / 3) / rhs_norm"),
        ],
    );
    let mut summary = Vec::new();
    for rep in &reports {
        for i in 0..rep.times.len() {
            table.push(vec![
                rep.beta.into(),
                rep.times[i].into(),
                rep.sup_norms[i].into(),
                rep.argmax_r[i].into(),
                rep.rhs_norm.into(),
                rep.ratios[i].into(),
            ]);
        }
        let rows: Vec<Vec<f64>> = rep.times.iter().zip(&rep.sup_norms).map(|(t, s)| vec![t.ln(), s.ln()]).collect();
        run.write_plot(&format!("decay_loglog_beta{}", rep.beta), PlotKind::DecayLogLog, &rows)?;
        summary.push(json!({
            "beta": rep.beta,
            "fitted_exponent": rep.fitted_exponent,
            "expected_exponent": rep.expected_exponent(),
            "r_squared": rep.r_squared,
            "ratio_max": rep.ratio_max,
            "ratio_monotone_growth": rep.ratio_monotone_growth,
        }));
    }
    run.write_table(&table)?;
    let summary = json!({ "fits": summary });
    run.write_json("summary.json", &summary)?;
    run.summary = summary;
    Ok(())
}
