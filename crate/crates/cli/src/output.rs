//! Tables, manifests and plot files. Every file is written to a temporary
//! sibling and renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Clone, Debug)]
pub struct Column {
    pub name: String,
    pub unit: String,
    /// Which quantity of the model the column holds.
    pub tag: String,
}

pub fn col(name: impl Into<String>, unit: &str, tag: &str) -> Column {
    Column { name: name.into(), unit: unit.to_string(), tag: tag.to_string() }
}

#[derive(Clone, Debug)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<i32> for Cell {
    fn from(v: i32) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            // 17 significant digits round-trip every f64
            Cell::Num(v) if v.is_finite() => format!("{v:.16e}"),
            Cell::Num(v) if v.is_infinite() => if *v > 0.0 { "inf" } else { "-inf" }.to_string(),
            Cell::Num(_) => String::new(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

/// A CSV table. Rows whose numbers are not finite get `status = failed`
/// and empty cells instead of NaN.
#[derive(Clone, Debug)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: Vec<Column>) -> Self {
        Self { name: name.to_string(), columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for {}", self.name);
        self.rows.push(row);
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> Result<Vec<u8>, CliError> {
        let mut out = Vec::new();
        let units: Vec<&str> = self.columns.iter().map(|c| c.unit.as_str()).collect();
        let tags: Vec<&str> = self.columns.iter().map(|c| c.tag.as_str()).collect();
        writeln!(out, "# units: {}", units.join(","))?;
        writeln!(out, "# tags: {}", tags.join(","))?;
        {
            let mut w = csv::Writer::from_writer(&mut out);
            let mut header: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
            header.push("status");
            w.write_record(&header).map_err(|e| CliError::Io(e.to_string()))?;
            for row in &self.rows {
                let failed = row.iter().any(|c| matches!(c, Cell::Num(v) if v.is_nan()));
                let mut rec: Vec<String> = row.iter().map(Cell::render).collect();
                rec.push(if failed { "failed" } else { "ok" }.to_string());
                w.write_record(&rec).map_err(|e| CliError::Io(e.to_string()))?;
            }
            w.flush()?;
        }
        Ok(out)
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(format!("{}.csv", self.name));
        write_atomic(&path, &self.render()?)?;
        Ok(path)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    /// `log t`, `log sup`
    DecayLogLog,
    /// `t`, relative energy drift
    EnergyDrift,
    /// `log eps`, `log max |m|`, fitted line
    OrderFit,
}

/// Whitespace-separated data plus a gnuplot script stub for one figure.
pub fn emit_plot_data(dir: &Path, stem: &str, kind: PlotKind, rows: &[Vec<f64>]) -> Result<Vec<PathBuf>, CliError> {
    if rows.is_empty() {
        return Err(CliError::Numerical(format!("no data for plot {stem}")));
    }
    let (header, script) = match kind {
        PlotKind::DecayLogLog => (
            "# log_t log_sup",
            format!(
                "set xlabel 'log t'\nset ylabel 'log sup |u|'\nplot '{stem}.dat' using 1:2 with linespoints title 'sup norm'\n"
            ),
        ),
        PlotKind::EnergyDrift => (
            "# t drift",
            format!("set xlabel 't'\nset ylabel 'relative drift'\nplot '{stem}.dat' using 1:2 with lines title 'energy drift'\n"),
        ),
        PlotKind::OrderFit => (
            "# log_param log_maxval fit_line",
            format!(
                "set xlabel 'log eps'\nset ylabel 'log max |m|'\nplot '{stem}.dat' using 1:2 with points title 'samples', '' using 1:3 with lines title 'fit'\n"
            ),
        ),
    };
    let mut data = String::new();
    data.push_str(header);
    data.push('\n');
    for r in rows {
        let line: Vec<String> = r.iter().map(|v| format!("{v:.16e}")).collect();
        data.push_str(&line.join(" "));
        data.push('\n');
    }
    let dat = dir.join(format!("{stem}.dat"));
    let gp = dir.join(format!("{stem}.gp"));
    write_atomic(&dat, data.as_bytes())?;
    write_atomic(&gp, script.as_bytes())?;
    Ok(vec![dat, gp])
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub artifact: String,
    pub version: String,
    pub subcommand: String,
    pub seed: u64,
    pub threads: usize,
    pub config: Value,
    pub status: String,
    pub error: Option<String>,
    pub outputs: Vec<String>,
    pub summary: Value,
    /// Seconds since the Unix epoch; the only non-reproducible field.
    pub timestamp: u64,
}

pub fn write_manifest(dir: &Path, m: &Manifest) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(m).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    write_atomic(&dir.join("manifest.json"), s.as_bytes())
}
