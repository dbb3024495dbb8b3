//! The Dirichlet–Neumann operator `G(h)` of the fluid domain `{z < h(x)}`.
//!
//! `G(h) f = sqrt(1 + |grad h|^2) dn phi` where `phi` is the harmonic
//! extension of `f` decaying as `z -> -inf`. Two independent evaluations are
//! provided: the multilinear series and a finite-depth elliptic solve on a
//! flattened slab.

mod geometry;
mod identities;
mod oracle;
mod series;

pub use geometry::{curvature, physical_energy, physical_energy_with};
pub use identities::{
    leibniz_gamma_check, multilinear_bound_probe, self_adjoint_defect, symmetry_check, BoundProbe,
    LeibnizField, SymmetryTransform,
};
pub use oracle::{dno_oracle, dno_oracle_refined, solve_oracle, OracleReport};
pub use series::{dno_series, dno_terms, max_slope};

use serde::{Deserialize, Serialize};

use crate::spectral::SpectralField;
use crate::{Error, Result};

/// Largest supported series order.
pub const MAX_SERIES_ORDER: usize = 6;
/// Hard cap on `||grad h||_inf` for both evaluations.
pub const SLOPE_GUARD: f64 = 0.5;

/// Surface elevation `h`, velocity-potential trace `psi`, and time.
#[derive(Clone, Debug)]
pub struct SurfaceState {
    pub h: SpectralField,
    pub psi: SpectralField,
    pub time: f64,
}

impl SurfaceState {
    /// Validates reality and removes the mean of `h`.
    pub fn new(mut h: SpectralField, psi: SpectralField, time: f64) -> Result<Self> {
        h.check_grid(&psi)?;
        if !h.is_real() || !psi.is_real() {
            return Err(Error::Config("surface fields must be real".into()));
        }
        h.remove_mean();
        Ok(Self { h, psi, time })
    }

    pub fn zeros(grid: crate::spectral::GridSpec) -> Self {
        Self { h: SpectralField::zeros(grid), psi: SpectralField::zeros(grid), time: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DnoConfig {
    /// Highest multilinear order kept, `G_0 .. G_N`.
    pub series_order: usize,
    /// Slab depth of the oracle.
    pub oracle_depth: f64,
    /// Number of depth intervals of the oracle.
    pub oracle_layers: usize,
    /// Exponential stretching of the depth grid toward the surface.
    #[serde(default = "default_stretch")]
    pub oracle_stretch: f64,
    /// Relative residual at which the oracle iteration stops.
    #[serde(default = "default_tol")]
    pub oracle_tol: f64,
}

fn default_stretch() -> f64 {
    4.0
}

fn default_tol() -> f64 {
    1e-13
}

impl Default for DnoConfig {
    fn default() -> Self {
        Self {
            series_order: 2,
            oracle_depth: 12.0,
            oracle_layers: 64,
            oracle_stretch: default_stretch(),
            oracle_tol: default_tol(),
        }
    }
}

impl DnoConfig {
    pub fn with_order(series_order: usize) -> Self {
        Self { series_order, ..Self::default() }
    }

    /// Checks the order cap, layer count and the depth guard for `box_length`.
    pub fn validate(&self, box_length: f64) -> Result<()> {
        if self.series_order > MAX_SERIES_ORDER {
            return Err(Error::OrderCap(self.series_order, MAX_SERIES_ORDER));
        }
        if self.oracle_layers < 16 {
            return Err(Error::Config(format!("oracle_layers = {} < 16", self.oracle_layers)));
        }
        let min_depth = 3.0 * box_length / (2.0 * std::f64::consts::PI);
        if !(self.oracle_depth >= min_depth) {
            return Err(Error::Config(format!(
                "oracle_depth = {} below 3 L / 2pi = {min_depth}",
                self.oracle_depth
            )));
        }
        if !(self.oracle_stretch >= 0.0) || !(self.oracle_tol > 0.0) {
            return Err(Error::Config("oracle_stretch and oracle_tol must be positive".into()));
        }
        Ok(())
    }
}
