//! Periodic grids, Fourier fields and the operators built on them.

pub mod fft;
mod field;
mod grid;
pub mod io;
pub mod lp;
pub mod vector_fields;

pub use field::SpectralField;
pub use grid::GridSpec;
pub use lp::{bernstein_sweep, lp_project, lp_range, partition_residual, resolvable_levels, BernsteinReport, BernsteinRow, LpKind};
pub use vector_fields::{
    apply_vector_field, check_margin, margin_fraction, omega, sigma, weighted_sobolev_norm,
    MultiIndex, NormExponent, VectorFieldOutput, VectorFieldTag, WeightedNorm,
};

use num_complex::Complex64;

/// Periodic Gaussian `amp * exp(-|x - c|^2 / (2 w^2))`, built from its
/// spectrum so that the field is exactly band-limited up to roundoff.
pub fn gaussian(grid: GridSpec, center: [f64; 2], width: f64, amp: f64) -> SpectralField {
    let area = grid.box_length() * grid.box_length();
    let pref = amp * 2.0 * std::f64::consts::PI * width * width / area;
    SpectralField::from_spectrum(grid, move |k| {
        let k2 = k[0] * k[0] + k[1] * k[1];
        let phase = -(k[0] * center[0] + k[1] * center[1]);
        Complex64::from_polar(pref * (-0.5 * width * width * k2).exp(), phase)
    })
}
