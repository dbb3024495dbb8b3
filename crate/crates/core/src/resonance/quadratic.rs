use num_complex::Complex64;
use serde::Serialize;

use super::symbols::{quadratic_symbol, SignPair};
use crate::dno::dno_terms;
use crate::evolution::{EvolutionConfig, Integrator};
use crate::fit::loglog_fit;
use crate::pseudo_product::{random_packet, t_m_naive};
use crate::rng;
use crate::spectral::{GridSpec, SpectralField};
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `u = Lambda^{1/2} h + i psi`.
pub fn complex_variable(h: &SpectralField, psi: &SpectralField) -> SpectralField {
    &h.lambda_pow(0.5) + &psi.scale_complex(I)
}

/// Quadratic part of the equation in `(h, psi)` variables:
/// `Lambda^{1/2} G_1(h) psi + i (-|grad psi|^2 / 2 + (Lambda psi)^2 / 2)`.
///
/// Returns the two channels separately.
pub fn quadratic_rhs_direct(h: &SpectralField, psi: &SpectralField) -> Result<(SpectralField, SpectralField)> {
    let g1 = dno_terms(h, psi, 1)?.pop().expect("order 1 term");
    let hch = g1.lambda_pow(0.5).dealiased();
    let [px, py] = psi.gradient();
    let lp = psi.lambda_pow(1.0);
    let grad2 = &px.product(&px)? + &py.product(&py)?;
    let pch = (&lp.product(&lp)?.scale(0.5) - &grad2.scale(0.5)).dealiased();
    Ok((hch, pch))
}

/// `T_{m--}(u, u) + T_{m++}(conj u, conj u) + T_{m+-}(conj u, u)`.
pub fn quadratic_rhs_symbols(u: &SpectralField) -> Result<SpectralField> {
    let ub = u.conj();
    let a = t_m_naive(u, u, &quadratic_symbol(SignPair::MinusMinus))?;
    let b = t_m_naive(&ub, &ub, &quadratic_symbol(SignPair::PlusPlus))?;
    let c = t_m_naive(&ub, u, &quadratic_symbol(SignPair::PlusMinus))?;
    Ok(&(&a + &b) + &c)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadraticTrial {
    pub amplitude: f64,
    /// `||Re(T-form) - h channel||_2`
    pub residual_h: f64,
    /// `||Im(T-form) - psi channel||_2`
    pub residual_psi: f64,
    /// `||T-form - direct||_2 / amplitude^2`
    pub normalized: f64,
    /// `||direct||_2 / amplitude^2`
    pub size: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuadraticReport {
    pub trials: Vec<QuadraticTrial>,
    pub max_normalized: f64,
}

pub fn compare(h: &SpectralField, psi: &SpectralField, amplitude: f64) -> Result<QuadraticTrial> {
    let (hch, pch) = quadratic_rhs_direct(h, psi)?;
    let t = quadratic_rhs_symbols(&complex_variable(h, psi))?;
    let rh = (&t.real_part() - &hch).l2_norm();
    let rp = (&t.imag_part() - &pch).l2_norm();
    let direct = &hch + &pch.scale_complex(I);
    let a2 = amplitude * amplitude;
    Ok(QuadraticTrial {
        amplitude,
        residual_h: rh,
        residual_psi: rp,
        normalized: (&t - &direct).l2_norm() / a2,
        size: direct.l2_norm() / a2,
    })
}

fn random_state(grid: GridSpec, r: &mut rng::ProbeRng, amplitude: f64) -> (SpectralField, SpectralField) {
    let mut h = random_packet(grid, r, None);
    h.remove_mean();
    let psi = random_packet(grid, r, None);
    (h.scale(amplitude / h.sup_norm()), psi.scale(amplitude / psi.sup_norm()))
}

/// Random localized states of the given amplitude; each trial compares the
/// symbol form with the direct evaluation.
pub fn quadratic_consistency(grid: GridSpec, trials: usize, amplitude: f64, seed: u64) -> Result<QuadraticReport> {
    let mut r = rng::seeded(seed);
    let mut out = Vec::with_capacity(trials);
    for _ in 0..trials {
        let (h, psi) = random_state(grid, &mut r, amplitude);
        out.push(compare(&h, &psi, amplitude)?);
    }
    let max_normalized = out.iter().map(|t| t.normalized).fold(0.0, f64::max);
    Ok(QuadraticReport { trials: out, max_normalized })
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingSweep {
    pub amplitudes: Vec<f64>,
    /// `||Q(u)||_2`
    pub quadratic: Vec<f64>,
    /// `||N(u) - Q(u)||_2` with `N` the full nonlinear right side.
    pub remainder: Vec<f64>,
    pub quadratic_exponent: f64,
    pub remainder_exponent: f64,
}

/// Amplitude sweep of one random state against the full nonlinear right side
/// of the evolution (surface tension 2, given series order).
pub fn quadratic_scaling_sweep(grid: GridSpec, amplitudes: &[f64], dno_order: usize, seed: u64) -> Result<ScalingSweep> {
    if amplitudes.len() < 2 {
        return Err(Error::Config("amplitude sweep needs at least two amplitudes".into()));
    }
    let mut r = rng::seeded(seed);
    let (h1, p1) = random_state(grid, &mut r, 1.0);
    let mut cfg = EvolutionConfig::new(&grid, 1.0);
    cfg.dno_order = dno_order;
    cfg.c_surface_tension = 2.0;
    let it = Integrator::new(grid, &cfg);
    let (mut q, mut rem) = (Vec::new(), Vec::new());
    for &a in amplitudes {
        let (h, psi) = (h1.scale(a), p1.scale(a));
        let u = complex_variable(&h, &psi).dealiased();
        let lin = u.apply_multiplier(|k| Complex64::new(0.0, -(k[0].hypot(k[1])).powf(1.5)))?;
        let full = &it.time_derivative(&u)? - &lin;
        let quad = quadratic_rhs_symbols(&u)?;
        q.push(quad.l2_norm());
        rem.push((&full - &quad).l2_norm());
    }
    let qe = loglog_fit(amplitudes, &q)?.slope;
    let re = loglog_fit(amplitudes, &rem)?.slope;
    Ok(ScalingSweep { amplitudes: amplitudes.to_vec(), quadratic: q, remainder: rem, quadratic_exponent: qe, remainder_exponent: re })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::new(32, 8.0 * std::f64::consts::PI).unwrap()
    }

    #[test]
    fn channels_isolate() {
        let mut r = rng::seeded(2);
        let (h, psi) = random_state(grid(), &mut r, 1e-2);
        let zero = SpectralField::zeros(grid());
        let t = compare(&h, &zero, 1e-2).unwrap();
        let tf = quadratic_rhs_symbols(&complex_variable(&h, &zero)).unwrap();
        assert!(tf.l2_norm() <= 1e-10 * 1e-4, "{}", tf.l2_norm());
        assert!(t.normalized < 1e-10);
        let t = compare(&zero, &psi, 1e-2).unwrap();
        assert!(t.residual_psi <= 1e-12 * 1e-4 && t.size > 0.0, "{t:?}");
    }

    #[test]
    fn symbol_form_matches_direct() {
        let rep = quadratic_consistency(grid(), 3, 1e-2, 4).unwrap();
        assert!(rep.max_normalized <= 1e-8, "{rep:?}");
    }

    #[test]
    fn quadratic_part_of_the_full_rhs() {
        let s = quadratic_scaling_sweep(grid(), &[1e-3, 2e-3, 4e-3, 8e-3], 2, 6).unwrap();
        assert!((s.quadratic_exponent - 2.0).abs() < 0.1, "{s:?}");
        assert!((s.remainder_exponent - 3.0).abs() < 0.1, "{s:?}");
    }
}
