use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{run_config, schema_version};
use crate::output::write_atomic;
use crate::{CliError, Run};

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Directories holding earlier runs; searched two levels deep for manifest.json.
    #[arg(long = "input", required = true)]
    pub inputs: Vec<PathBuf>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub inputs: Vec<PathBuf>,
}

run_config!(ReportConfig);

pub fn resolve(a: &ReportArgs) -> Result<ReportConfig, CliError> {
    for p in &a.inputs {
        if !p.is_dir() {
            return Err(CliError::Config(format!("{} is not a directory", p.display())));
        }
    }
    Ok(ReportConfig { schema_version: schema_version(), seed: None, output_dir: None, inputs: a.inputs.clone() })
}

fn manifests(dir: &Path, depth: usize, out: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let m = dir.join("manifest.json");
    if m.is_file() {
        out.push(m);
    }
    if depth == 0 {
        return Ok(());
    }
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect();
    entries.sort();
    for e in entries {
        manifests(&e, depth - 1, out)?;
    }
    Ok(())
}

pub fn run(_a: &ReportArgs, run: &mut Run) -> Result<(), CliError> {
    let cfg: ReportConfig = crate::config::from_echo(&run.config)?;
    let own = run.dir.join("manifest.json");
    let mut found = Vec::new();
    for d in &cfg.inputs {
        manifests(d, 2, &mut found)?;
    }
    found.retain(|p| fs::canonicalize(p).ok() != fs::canonicalize(&own).ok());
    found.dedup();
    if found.is_empty() {
        return Err(CliError::Config("no manifest.json found under the inputs".into()));
    }
    let mut md = String::from("# capwave report\n\n| run | subcommand | status | seed | outputs |\n|---|---|---|---|---|\n");
    let mut sections = String::new();
    let mut rows = Vec::new();
    for p in &found {
        let text = fs::read_to_string(p)?;
        let m: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
        let dir = p.parent().unwrap_or(Path::new(".")).display().to_string();
        let sub = m["subcommand"].as_str().unwrap_or("?");
        let status = m["status"].as_str().unwrap_or("?");
        let outputs = m["outputs"].as_array().map_or(0, |a| a.len());
        let _ = writeln!(md, "| `{dir}` | {sub} | {status} | {} | {outputs} |", m["seed"]);
        let _ = writeln!(sections, "\n## {sub} (`{dir}`)\n");
        if let Some(e) = m["error"].as_str() {
            let _ = writeln!(sections, "Error: {e}\n");
        }
        let pretty = serde_json::to_string_pretty(&m["summary"]).unwrap_or_default();
        let _ = writeln!(sections, "```json\n{pretty}\n```");
        rows.push(json!({"dir": dir, "subcommand": sub, "status": status}));
    }
    md.push_str(&sections);
    let path = run.dir.join("report.md");
    write_atomic(&path, md.as_bytes())?;
    run.record(&path);
    run.summary = json!({ "runs": rows });
    Ok(())
}
