//! Mean curvature and the conserved energy.

use super::series::dno_series;
use super::{DnoConfig, SurfaceState};
use crate::spectral::SpectralField;
use crate::Result;

/// Default surface-tension coefficient.
pub const DEFAULT_SURFACE_TENSION: f64 = 2.0;

/// `kappa = 1/2 div( grad h / sqrt(1 + |grad h|^2) )`, dealiased.
pub fn curvature(h: &SpectralField) -> SpectralField {
    let grid = *h.grid();
    let hx = h.deriv(0).to_real_values();
    let hy = h.deriv(1).to_real_values();
    let (mut qx, mut qy) = (hx.clone(), hy.clone());
    for i in 0..hx.len() {
        let w = 0.5 / (1.0 + hx[i] * hx[i] + hy[i] * hy[i]).sqrt();
        qx[i] = hx[i] * w;
        qy[i] = hy[i] * w;
    }
    let qx = SpectralField::from_real_values(grid, &qx).expect("grid length");
    let qy = SpectralField::from_real_values(grid, &qy).expect("grid length");
    (&qx.deriv(0) + &qy.deriv(1)).dealiased()
}

/// `int sqrt(1 + |grad h|^2) - 1 dx`.
pub fn surface_area_excess(h: &SpectralField) -> f64 {
    let hx = h.deriv(0).to_real_values();
    let hy = h.deriv(1).to_real_values();
    let sum: f64 = hx
        .iter()
        .zip(&hy)
        .map(|(a, b)| {
            let s = a * a + b * b;
            // sqrt(1 + s) - 1 without cancellation
            s / (1.0 + (1.0 + s).sqrt())
        })
        .sum();
    sum * h.grid().cell_area()
}

/// `int psi G(h) psi dx + c int (sqrt(1 + |grad h|^2) - 1) dx` with the series
/// truncated at `order`. With `kappa` carrying the factor 1/2, this is
/// conserved by the flow with surface tension `c`.
pub fn physical_energy_with(state: &SurfaceState, order: usize, c: f64) -> Result<f64> {
    let g = dno_series(&state.h, &state.psi, order)?;
    let kinetic = state.psi.inner(&g)?.re;
    Ok(kinetic + c * surface_area_excess(&state.h))
}

/// [`physical_energy_with`] at the configured order and `c = 2`.
pub fn physical_energy(state: &SurfaceState, cfg: &DnoConfig) -> Result<f64> {
    physical_energy_with(state, cfg.series_order, DEFAULT_SURFACE_TENSION)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{gaussian, GridSpec};
    use std::f64::consts::PI;

    #[test]
    fn flat_curvature_and_oddness() {
        let g = GridSpec::unit(32).unwrap();
        assert_eq!(curvature(&SpectralField::zeros(g)).l2_norm(), 0.0);
        let h = gaussian(g, [0.3, 0.1], 0.7, 0.2);
        let a = curvature(&h);
        let b = curvature(&h.scale(-1.0));
        assert_eq!(a.coeffs(), b.scale(-1.0).coeffs());
    }

    #[test]
    fn curvature_one_dimensional_closed_form() {
        let g = GridSpec::unit(64).unwrap();
        let eps = 0.3;
        let h = SpectralField::from_fn(g, move |x, _| eps * x.cos());
        // 1/2 d/dx ( -eps sin x (1 + eps^2 sin^2 x)^(-1/2) ) = -eps/2 cos x (1 + eps^2 sin^2 x)^(-3/2)
        let exact = SpectralField::from_fn(g, move |x, _| {
            -0.5 * eps * x.cos() * (1.0 + eps * eps * x.sin().powi(2)).powf(-1.5)
        });
        let k = curvature(&h);
        assert!((&k - &exact).l2_norm() / exact.l2_norm() < 1e-10);
    }

    #[test]
    fn curvature_is_half_laplacian_plus_cubic() {
        let g = GridSpec::unit(64).unwrap();
        let h0 = gaussian(g, [0.0, 0.0], 0.8, 1.0);
        let mut ratios = Vec::new();
        for eps in [0.04, 0.02, 0.01] {
            let h = h0.scale(eps);
            let lin = h.laplacian().scale(0.5).dealiased();
            ratios.push((&curvature(&h) - &lin).l2_norm() / eps.powi(3));
        }
        assert!(ratios.iter().all(|r| r.is_finite()));
        assert!((ratios[0] / ratios[2] - 1.0).abs() < 0.01, "{ratios:?}");
    }

    #[test]
    fn energy_examples() {
        let g = GridSpec::unit(32).unwrap();
        let cfg = DnoConfig::default();
        assert_eq!(physical_energy(&SurfaceState::zeros(g), &cfg).unwrap(), 0.0);
        let a = 0.3;
        let psi = SpectralField::from_fn(g, move |x, _| a * x.cos());
        let st = SurfaceState::new(SpectralField::zeros(g), psi, 0.0).unwrap();
        let e = physical_energy(&st, &cfg).unwrap();
        let expected = a * a * (2.0 * PI).powi(2) / 2.0;
        assert!((e - expected).abs() / expected < 1e-13);
    }

    #[test]
    fn energy_ignores_constant_potential() {
        let g = GridSpec::unit(32).unwrap();
        let h = gaussian(g, [0.3, 0.0], 0.7, 0.05);
        let psi = gaussian(g, [-0.2, 0.1], 0.9, 0.4);
        let mut shifted = psi.clone();
        let c0 = shifted.coeff(0, 0);
        shifted.set_coeff(0, 0, c0 + 1.7);
        let s1 = SurfaceState::new(h.clone(), psi, 0.0).unwrap();
        let s2 = SurfaceState::new(h, shifted, 0.0).unwrap();
        let cfg = DnoConfig::with_order(3);
        let e1 = physical_energy(&s1, &cfg).unwrap();
        let e2 = physical_energy(&s2, &cfg).unwrap();
        assert!((e1 - e2).abs() / e1 < 1e-12, "{e1} {e2}");
    }
}
