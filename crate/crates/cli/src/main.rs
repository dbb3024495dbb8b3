//! `capwave`: command-line front end for the capillary water-wave laboratory.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use output::{write_manifest, Manifest, SCHEMA_VERSION};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad or missing config. Exit 2.
    Config(String),
    /// A kernel failed mid-run. Exit 3.
    Numerical(String),
    /// The run finished but a checked property did not hold. Exit 3.
    Contract(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 3,
        }
    }

    fn status(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config_error",
            CliError::Numerical(_) => "numerical_failure",
            CliError::Contract(_) => "contract_failed",
            CliError::Io(_) => "io_error",
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Contract(m) => write!(f, "check failed: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<capwave::Error> for CliError {
    fn from(e: capwave::Error) -> Self {
        use capwave::Error as E;
        match e {
            E::Config(_) | E::InvalidGrid(_) | E::OrderCap(..) | E::Json(_) => CliError::Config(e.to_string()),
            E::Io(e) => CliError::Io(e.to_string()),
            e => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "capwave", version, about = "Capillary water waves: DN operator, evolution, resonances and decay")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Seed for randomized probes; overrides `seed` in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the full system from a JSON run config.
    Simulate(commands::simulate::SimulateArgs),
    /// Series against oracle convergence and DN identities.
    DnoVerify(commands::dno::DnoArgs),
    /// Time, space and space-time resonant sets of the four phases.
    ResonanceScan(commands::resonance::ResonanceArgs),
    /// Vanishing-order fits of the quadratic and integration-by-parts symbols.
    SymbolOrder(commands::symbols::SymbolOrderArgs),
    /// Dyadic bound probe for a bilinear multiplier.
    CmProbe(commands::cm::CmArgs),
    /// Sup-norm decay of the linear flow on the plane.
    DecayFit(commands::decay::DecayArgs),
    /// Collect manifests of earlier runs into report.md.
    Report(commands::report::ReportArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::DnoVerify(_) => "dno-verify",
            Command::ResonanceScan(_) => "resonance-scan",
            Command::SymbolOrder(_) => "symbol-order",
            Command::CmProbe(_) => "cm-probe",
            Command::DecayFit(_) => "decay-fit",
            Command::Report(_) => "report",
        }
    }
}

/// State shared by every subcommand: where to write and what was written.
pub struct Run {
    pub dir: PathBuf,
    pub seed: u64,
    pub config: Value,
    pub outputs: Vec<String>,
    pub summary: Value,
}

impl Run {
    pub fn record(&mut self, path: &std::path::Path) {
        let rel = path.strip_prefix(&self.dir).unwrap_or(path);
        self.outputs.push(rel.display().to_string());
    }

    pub fn write_table(&mut self, t: &output::Table) -> Result<(), CliError> {
        let p = t.write(&self.dir)?;
        self.record(&p);
        Ok(())
    }

    pub fn write_plot(&mut self, stem: &str, kind: output::PlotKind, rows: &[Vec<f64>]) -> Result<(), CliError> {
        for p in output::emit_plot_data(&self.dir, stem, kind, rows)? {
            self.record(&p);
        }
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, v: &impl serde::Serialize) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Io(e.to_string()))?;
        s.push('\n');
        let p = self.dir.join(name);
        output::write_atomic(&p, s.as_bytes())?;
        self.record(&p);
        Ok(())
    }
}

fn threads() -> Result<usize, CliError> {
    match std::env::var("CAPWAVE_THREADS") {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("CAPWAVE_THREADS must be a positive integer, got {v:?}")))?;
            if n == 0 {
                return Err(CliError::Config("CAPWAVE_THREADS must be at least 1".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Config(e.to_string()))?;
            Ok(n)
        }
        Err(_) => Ok(rayon::current_num_threads()),
    }
}

fn execute(cmd: &Command, run: &mut Run) -> Result<(), CliError> {
    match cmd {
        Command::Simulate(a) => commands::simulate::run(a, run),
        Command::DnoVerify(a) => commands::dno::run(a, run),
        Command::ResonanceScan(a) => commands::resonance::run(a, run),
        Command::SymbolOrder(a) => commands::symbols::run(a, run),
        Command::CmProbe(a) => commands::cm::run(a, run),
        Command::DecayFit(a) => commands::decay::run(a, run),
        Command::Report(a) => commands::report::run(a, run),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let name = cli.command.name();
    let fail = |e: CliError| {
        eprintln!("capwave {name}: {e}");
        ExitCode::from(e.code())
    };
    let threads = match threads() {
        Ok(n) => n,
        Err(e) => return fail(e),
    };
    let prepared = match commands::prepare(&cli.command, &cli.global) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    if let Err(e) = std::fs::create_dir_all(&prepared.dir) {
        return fail(CliError::Config(format!("cannot create {}: {e}", prepared.dir.display())));
    }
    let mut run = Run { dir: prepared.dir, seed: prepared.seed, config: prepared.config, outputs: Vec::new(), summary: Value::Null };
    let result = execute(&cli.command, &mut run);
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        artifact: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        subcommand: name.to_string(),
        seed: run.seed,
        threads,
        config: run.config.clone(),
        status: result.as_ref().map_or_else(|e| e.status().to_string(), |_| "ok".to_string()),
        error: result.as_ref().err().map(|e| e.to_string()),
        outputs: run.outputs.clone(),
        summary: run.summary.clone(),
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
    };
    if let Err(e) = write_manifest(&run.dir, &manifest) {
        return fail(e);
    }
    match result {
        Ok(()) => {
            println!("{}", run.dir.join("manifest.json").display());
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}
