//! The group `e^{i t Lambda^{3/2}}` on the plane through circular harmonics
//! and Bessel functions, and numerical checks of its decay.
//!
//! Fourier transform on the plane: `f^(xi) = int f(x) exp(-i x.xi) dx`.
//! Bessel functions carry the angular normalisation
//! `J_m(s) = int_{S^1} exp(i (s cos t + m t)) dt`.

mod bessel;
mod hardy;
mod profile;
mod propagate;
mod quadrature;

pub use bessel::{bessel_j, bessel_j_std, envelope_constant, MAX_ORDER};
pub use hardy::{hardy_bound_check, hardy_weight, phi_regime_table, HardyReport, PhiRegimeTable, RegimeRow};
pub use profile::{
    angular_samples, circular_harmonics, gaussian_transform, uniform_nodes, FourierInput, HarmonicDecomposition,
    RadialProfile, ANGULAR_TAIL_TOL,
};
pub use propagate::{
    beta_family, grid_rhs_terms, l1_scale, max_group_speed, propagate_point, propagate_point_with, radial_breakpoints,
    radial_integral, stationary_point, sup_at_time, sup_norm_decay, weighted_rhs_norm, weighted_rhs_terms,
    DecayReport, PointValue, RScan,
};
pub use quadrature::{integrate, QuadOptions, QuadResult};
