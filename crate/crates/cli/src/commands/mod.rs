pub mod cm;
pub mod decay;
pub mod dno;
pub mod report;
pub mod resonance;
pub mod simulate;
pub mod symbols;

use crate::config::{finish, Prepared};
use crate::{CliError, Command, GlobalArgs};

/// Resolves the config of a subcommand before anything is written.
pub(crate) fn prepare(cmd: &Command, global: &GlobalArgs) -> Result<Prepared, CliError> {
    match cmd {
        Command::Simulate(a) => finish(simulate::resolve(a)?, global),
        Command::DnoVerify(a) => finish(dno::resolve(a)?, global),
        Command::ResonanceScan(a) => finish(resonance::resolve(a)?, global),
        Command::SymbolOrder(a) => finish(symbols::resolve(a)?, global),
        Command::CmProbe(a) => finish(cm::resolve(a)?, global),
        Command::DecayFit(a) => finish(decay::resolve(a)?, global),
        Command::Report(a) => finish(report::resolve(a)?, global),
    }
}

/// `ln` pairs plus the fitted line, for order-fit plots.
pub(crate) fn fit_rows(points: &[(f64, f64)], slope: f64, intercept: f64) -> Vec<Vec<f64>> {
    points.iter().map(|&(x, y)| vec![x, y, intercept + slope * x]).collect()
}
