//! Per-sample diagnostics: energy, Sobolev and vector-field norms, sup norms.

use serde::{Deserialize, Serialize};

use super::{ComplexState, EvolutionConfig, Integrator};
use crate::dno::physical_energy_with;
use crate::spectral::vector_fields::{
    margin_fraction, omega, sigma, sobolev_norm, MultiIndex, NormExponent, MARGIN_TOLERANCE,
};
use crate::spectral::SpectralField;
use crate::{Error, Result};

/// Decay exponents probed by the sup-norm diagnostic.
pub const BETAS: [f64; 3] = [0.0, 0.25, 0.5];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticParams {
    /// Vector-field budget parameter; the energy norm uses up to `2K` fields.
    #[serde(rename = "K")]
    pub k: usize,
    pub delta: f64,
    /// Must equal `(2K + 1) delta`.
    pub delta_prime: f64,
    pub alpha: f64,
    pub iota: f64,
    /// Exponents `s` of the reported `||Lambda^1/2 u||_{H^s}`.
    #[serde(default = "default_sobolev")]
    pub sobolev_s: Vec<f64>,
    /// Cap on the number of vector fields in the energy-norm summands.
    #[serde(default = "default_fields")]
    pub max_vector_fields: usize,
}

fn default_sobolev() -> Vec<f64> {
    vec![0.0, 4.5]
}

fn default_fields() -> usize {
    1
}

impl Default for DiagnosticParams {
    fn default() -> Self {
        Self {
            k: 2,
            delta: 0.01,
            delta_prime: 0.05,
            alpha: 0.2,
            iota: 0.05,
            sobolev_s: default_sobolev(),
            max_vector_fields: default_fields(),
        }
    }
}

impl DiagnosticParams {
    /// `delta_prime` set to `(2K + 1) delta`.
    pub fn with(k: usize, delta: f64, alpha: f64, iota: f64) -> Self {
        Self { k, delta, delta_prime: (2 * k + 1) as f64 * delta, alpha, iota, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let expect = (2 * self.k + 1) as f64 * self.delta;
        if (self.delta_prime - expect).abs() > 1e-12 * expect.abs().max(1.0) {
            return Err(Error::Config(format!("delta_prime = {} but (2K+1) delta = {expect}", self.delta_prime)));
        }
        if !(self.delta >= 0.0 && self.iota > 0.0 && self.alpha >= 0.0) {
            return Err(Error::Config("delta, alpha must be nonnegative and iota positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupNorm {
    pub beta: f64,
    /// `||Y(D) Lambda^(1/2 + alpha - beta) u||_inf`
    pub value: f64,
    /// `value * <t>^(1 - delta' - 2 beta / 3)`
    pub weighted: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub time: f64,
    pub energy: f64,
    /// `(s, ||Lambda^1/2 u||_{H^s})`
    pub hs_norms: Vec<(f64, f64)>,
    /// `<t>^-(j+1) delta ||Lambda^1/2 u||_{W^{3(2K-j)+9/2, 2}_j}` for each `j`.
    pub energy_norm_terms: Vec<f64>,
    pub energy_norm: f64,
    /// Multi-indices with two or more scaling fields were skipped.
    pub scaling_truncated: bool,
    pub sup_norms: Vec<SupNorm>,
    pub margin_warning: Option<f64>,
    pub horizon_flag: bool,
}

fn bracket(t: f64) -> f64 {
    (1.0 + t * t).sqrt()
}

pub fn diagnostics(
    state: &ComplexState,
    it: &Integrator,
    cfg: &EvolutionConfig,
    horizon: f64,
) -> Result<DiagnosticsReport> {
    let p = &cfg.diagnostic_params;
    let c = cfg.c_surface_tension;
    let t = state.time;
    let surface = state.to_surface(c);
    let energy = physical_energy_with(&surface, cfg.dno_order, c)?;
    let half = state.u.lambda_pow(0.5);
    let hs_norms = p.sobolev_s.iter().map(|&s| (s, sobolev_norm(&half, s, NormExponent::Two))).collect();

    let jmax = (2 * p.k).min(p.max_vector_fields);
    let needs_dt = jmax >= 1;
    let half_dt = if needs_dt { Some(it.time_derivative(&state.u)?.lambda_pow(0.5)) } else { None };
    let mut margin: Option<f64> = None;
    let mut truncated = false;
    let mut terms = Vec::new();
    for j in 0..=jmax {
        let k = 3.0 * (2 * p.k - j) as f64 + 4.5;
        let mut sum = 0.0;
        for gamma in MultiIndex::up_to(j) {
            if gamma.0 >= 2 {
                truncated = true;
                continue;
            }
            for i1 in 0..=3 * gamma.2 {
                let i2 = 3 * gamma.2 - i1;
                let d = |f: &SpectralField| {
                    let mut g = f.clone();
                    for _ in 0..i1 {
                        g = g.deriv(0);
                    }
                    for _ in 0..i2 {
                        g = g.deriv(1);
                    }
                    g
                };
                let mut x = d(&half);
                let mut xt = half_dt.as_ref().map(d);
                let mut note = |f: &SpectralField| {
                    let m = margin_fraction(f);
                    if m >= MARGIN_TOLERANCE {
                        margin = Some(margin.map_or(m, |w| w.max(m)));
                    }
                };
                for _ in 0..gamma.1 {
                    note(&x);
                    x = omega(&x);
                    xt = xt.map(|f| omega(&f));
                }
                if gamma.0 == 1 {
                    note(&x);
                    let xt = xt.expect("time derivative computed when fields are requested");
                    x = &xt.scale(1.5 * t) + &sigma(&x);
                }
                sum += sobolev_norm(&x, k, NormExponent::Two);
            }
        }
        terms.push(bracket(t).powf(-((j + 1) as f64) * p.delta) * sum);
    }

    let sup_norms = BETAS
        .iter()
        .map(|&beta| {
            let value = state.u.lambda_pow(0.5 + p.alpha - beta).y_weight(p.iota).sup_norm();
            let weighted = value * bracket(t).powf(1.0 - p.delta_prime - 2.0 * beta / 3.0);
            SupNorm { beta, value, weighted }
        })
        .collect();

    Ok(DiagnosticsReport {
        time: t,
        energy,
        hs_norms,
        energy_norm: terms.iter().sum(),
        energy_norm_terms: terms,
        scaling_truncated: truncated,
        sup_norms,
        margin_warning: margin,
        horizon_flag: t > horizon,
    })
}
