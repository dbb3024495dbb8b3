use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("dimension mismatch: expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("grids differ between operands")]
    GridMismatch,
    #[error("symbol is not finite at wavevector ({0}, {1})")]
    NonFiniteSymbol(f64, f64),
    #[error("slope guard violated: max |grad h| = {0:.4} (limit {1})")]
    SlopeGuard(f64, f64),
    #[error("series order {0} exceeds cap {1}")]
    OrderCap(usize, usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("field mass too close to the box boundary ({0:.3e} of l2 mass in the outer margin)")]
    Margin(f64),
    #[error("iterative solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("numerical blow-up at t = {time}: {reason}")]
    BlowUp { time: f64, reason: String },
    #[error("search failed, best residual {0:.3e}")]
    SearchFailed(f64),
    #[error("degenerate regression: {0}")]
    Regression(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
