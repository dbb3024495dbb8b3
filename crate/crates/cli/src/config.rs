//! JSON run configs. Every document carries `schema_version`, unknown
//! fields are rejected, and the resolved config (defaults filled in, flag
//! overrides applied) is what gets echoed into the manifest.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::output::SCHEMA_VERSION;
use crate::CliError;

pub const DEFAULT_OUTPUT_DIR: &str = "capwave-out";

/// Fields common to all run configs.
pub trait RunConfig: Serialize + DeserializeOwned {
    fn seed_mut(&mut self) -> &mut Option<u64>;
    fn output_dir_mut(&mut self) -> &mut Option<PathBuf>;
}

macro_rules! run_config {
    ($t:ty) => {
        impl $crate::config::RunConfig for $t {
            fn seed_mut(&mut self) -> &mut Option<u64> {
                &mut self.seed
            }
            fn output_dir_mut(&mut self) -> &mut Option<PathBuf> {
                &mut self.output_dir
            }
        }
    };
}
pub(crate) use run_config;

pub fn schema_version() -> u32 {
    SCHEMA_VERSION
}

fn check_version(v: &Value, origin: &str) -> Result<(), CliError> {
    match v.get("schema_version") {
        None => Err(CliError::Config(format!("{origin}: missing schema_version"))),
        Some(Value::Number(n)) if n.as_u64() == Some(SCHEMA_VERSION as u64) => Ok(()),
        Some(other) => Err(CliError::Config(format!(
            "{origin}: schema_version {other} is not supported (expected {SCHEMA_VERSION})"
        ))),
    }
}

pub fn parse<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T, CliError> {
    let v: Value = serde_json::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
    check_version(&v, origin)?;
    serde_json::from_value(v).map_err(|e| CliError::Config(format!("{origin}: {e}")))
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse(&text, &path.display().to_string())
}

/// Reads a config file when given, else starts from the defaults.
pub fn load_or_default<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    path.map_or_else(|| Ok(T::default()), load)
}

pub struct Prepared {
    pub dir: PathBuf,
    pub seed: u64,
    pub config: Value,
}

/// Applies `--seed` and `--output-dir` and turns the config into its echo.
pub fn finish<T: RunConfig>(mut cfg: T, global: &crate::GlobalArgs) -> Result<Prepared, CliError> {
    let seed = global.seed.or(*cfg.seed_mut()).unwrap_or(0);
    *cfg.seed_mut() = Some(seed);
    let dir = global
        .output_dir
        .clone()
        .or_else(|| cfg.output_dir_mut().clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    *cfg.output_dir_mut() = Some(dir.clone());
    let config = serde_json::to_value(&cfg).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(Prepared { dir, seed, config })
}

pub fn from_echo<T: DeserializeOwned>(v: &Value) -> Result<T, CliError> {
    serde_json::from_value(v.clone()).map_err(|e| CliError::Config(e.to_string()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(rename = "L")]
    pub box_length: f64,
}

impl GridConfig {
    pub fn spec(&self) -> Result<capwave::spectral::GridSpec, CliError> {
        Ok(capwave::spectral::GridSpec::new(self.n, self.box_length)?)
    }
}

/// `"2"` or `"inf"`.
pub fn norm_exponent(s: &str) -> Result<capwave::spectral::NormExponent, CliError> {
    use capwave::spectral::NormExponent;
    match s {
        "2" => Ok(NormExponent::Two),
        "inf" | "infinity" => Ok(NormExponent::Infinity),
        _ => Err(CliError::Config(format!("norm exponent must be 2 or inf, got {s:?}"))),
    }
}
