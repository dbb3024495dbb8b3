//! Numerical laboratory for the capillary water-wave system on a periodic box.
//!
//! The crate is organised bottom-up:
//!
//! * [`spectral`] — grids, Fourier fields, multipliers, Littlewood–Paley
//!   projections, vector fields and weighted norms.
//! * [`dno`] — the Dirichlet–Neumann operator: multilinear series, a
//!   flattened-domain elliptic oracle, curvature, energy and symmetry checks.
//! * [`evolution`] — integrating-factor time stepping and run diagnostics.
//! * [`resonance`] — quadratic symbols, interaction phases, resonant sets,
//!   vanishing-order fits and integration-by-parts symbols.
//! * [`pseudo_product`] — bilinear Fourier multipliers and bound probes.
//! * [`dispersive`] — Bessel functions, circular harmonics, oscillatory
//!   radial integrals and sup-norm decay fits on the plane.
//!
//! Fourier convention on the box `[-L/2, L/2)^2` with `n` points per axis:
//! `c_m = N^-2 sum_x f(x) exp(-i k.x)` with `k = 2 pi m / L`, so that
//! `f(x) = sum_m c_m exp(i k.x)`. Continuum norms (`||f||_2^2 = int |f|^2 dx`)
//! are used throughout.

pub mod dispersive;
pub mod dno;
pub mod error;
pub mod evolution;
pub mod fit;
pub mod pseudo_product;
pub mod resonance;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;
