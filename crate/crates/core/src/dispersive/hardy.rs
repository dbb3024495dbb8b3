use std::f64::consts::PI;

use serde::Serialize;

use super::profile::RadialProfile;
use crate::{Error, Result};

/// `rho^{1/2 - eps}` below one, `rho^{1/2 + eps}` above.
pub fn hardy_weight(rho: f64, eps: f64) -> f64 {
    if rho <= 1.0 {
        rho.powf(0.5 - eps)
    } else {
        rho.powf(0.5 + eps)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HardyReport {
    pub eps: f64,
    /// `max_rho |f^(rho)| A(rho) / ||A d_rho f^||_{L^2(R^2)}`.
    pub ratio: f64,
    pub argmax: f64,
    /// `(2 pi (1 - 2 eps))^{-1/2}`, from Cauchy-Schwarz on `f^(rho) = -int_rho^inf d_rho f^`.
    pub universal_bound: f64,
}

/// Ratio in the Hardy-type bound `|f^(rho)| <~ ||A d_rho f^|| / A(rho)`.
pub fn hardy_bound_check(profile: &RadialProfile, eps: f64) -> Result<HardyReport> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Config(format!("eps must lie in (0, 1/2), got {eps}")));
    }
    let norm2 = 2.0 * PI * profile.weighted_integral(|r| (hardy_weight(r, eps) * profile.derivative(r).norm()).powi(2) * r)?;
    if !norm2.is_finite() || norm2 > 1e300 {
        return Err(Error::Quadrature("weighted derivative norm diverges".into()));
    }
    if norm2 <= 0.0 {
        return Err(Error::Config("profile is constant; the weighted norm vanishes".into()));
    }
    let nodes = profile.rho_nodes();
    let mut best = (0.0, nodes[0]);
    for w in nodes.windows(2) {
        for s in 0..4 {
            let r = w[0] + (w[1] - w[0]) * s as f64 / 4.0;
            let v = profile.eval(r).norm() * hardy_weight(r, eps);
            if v > best.0 {
                best = (v, r);
            }
        }
    }
    Ok(HardyReport {
        eps,
        ratio: best.0 / norm2.sqrt(),
        argmax: best.1,
        universal_bound: 1.0 / (2.0 * PI * (1.0 - 2.0 * eps)).sqrt(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RegimeRow {
    pub regime: String,
    pub rho_lo: f64,
    pub rho_hi: f64,
    pub samples: usize,
    /// Extremes of `|phi'| / comparator`.
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Extremes of `|d_rho (1/phi')| / comparator`.
    pub min_inv_ratio: f64,
    pub max_inv_ratio: f64,
}

impl RegimeRow {
    pub fn within(&self, bracket: f64) -> bool {
        [self.min_ratio, self.max_ratio, self.min_inv_ratio, self.max_inv_ratio]
            .iter()
            .all(|&x| x >= 1.0 / bracket && x <= bracket)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PhiRegimeTable {
    pub big_r: f64,
    pub bracket: f64,
    pub rows: Vec<RegimeRow>,
    pub pass: bool,
}

/// Scan of `phi(rho) = rho^{3/2} - R rho` against its piecewise
/// comparabilities, with `h = rho - 4R^2/9`:
/// `|phi'| ~ R, h/R, sqrt(h)` and `|d(1/phi')| ~ 1/(R^2 sqrt(rho)), R/h^2, rho^{-3/2}`
/// below `2R^2/9`, up to `10R^2` and beyond.
pub fn phi_regime_table(big_r: f64, samples_per_regime: usize) -> Result<PhiRegimeTable> {
    if !(big_r > 0.0) || !big_r.is_finite() {
        return Err(Error::Config(format!("R must be positive, got {big_r}")));
    }
    let r2 = big_r * big_r;
    let rho0 = 4.0 * r2 / 9.0;
    let dphi = |rho: f64| 1.5 * rho.sqrt() - big_r;
    let ddphi = |rho: f64| 0.75 / rho.sqrt();
    let bracket = 20.0;
    let regimes: [(&str, f64, f64); 3] = [("low", 1e-6 * r2, 2.0 * r2 / 9.0), ("stationary", 2.0 * r2 / 9.0, 10.0 * r2), ("high", 10.0 * r2, 1e4 * r2)];
    let mut rows = Vec::new();
    for (idx, (name, lo, hi)) in regimes.iter().enumerate() {
        let n = samples_per_regime.max(8);
        let mut row = RegimeRow {
            regime: name.to_string(),
            rho_lo: *lo,
            rho_hi: *hi,
            samples: 0,
            min_ratio: f64::INFINITY,
            max_ratio: 0.0,
            min_inv_ratio: f64::INFINITY,
            max_inv_ratio: 0.0,
        };
        for i in 0..n {
            let s = i as f64 / (n - 1) as f64;
            let rho = if idx == 1 { lo + (hi - lo) * s } else { lo * (hi / lo).powf(s) };
            let h = rho - rho0;
            if h.abs() <= 1e-9 * r2 {
                continue;
            }
            let (cmp, inv_cmp) = match idx {
                0 => (big_r, 1.0 / (r2 * rho.sqrt())),
                1 => (h.abs() / big_r, big_r / (h * h)),
                _ => (h.sqrt(), rho.powf(-1.5)),
            };
            let d = dphi(rho).abs();
            let inv = ddphi(rho) / (d * d);
            let (a, b) = (d / cmp, inv / inv_cmp);
            row.min_ratio = row.min_ratio.min(a);
            row.max_ratio = row.max_ratio.max(a);
            row.min_inv_ratio = row.min_inv_ratio.min(b);
            row.max_inv_ratio = row.max_inv_ratio.max(b);
            row.samples += 1;
        }
        rows.push(row);
    }
    let pass = rows.iter().all(|r| r.within(bracket));
    Ok(PhiRegimeTable { big_r, bracket, rows, pass })
}

#[cfg(test)]
mod tests {
    use super::super::profile::uniform_nodes;
    use super::*;
    use crate::spectral::lp::plateau;
    use num_complex::Complex64;

    fn profile(f: impl Fn(f64) -> f64) -> RadialProfile {
        RadialProfile::from_fn(uniform_nodes(40.0, 16000), 0.0, |r| Complex64::new(f(r), 0.0)).unwrap()
    }

    #[test]
    fn exponential_profile_and_homogeneity() {
        let p = profile(|r| (-r).exp());
        let a = hardy_bound_check(&p, 0.05).unwrap();
        assert!(a.ratio.is_finite() && a.ratio > 0.0 && a.ratio <= a.universal_bound, "{a:?}");
        let b = hardy_bound_check(&p.scaled(Complex64::new(-3.0, 2.0)), 0.05).unwrap();
        assert!((a.ratio - b.ratio).abs() < 1e-12 * a.ratio);
    }

    #[test]
    fn cutoff_family_is_monotone_and_bounded() {
        let mut last = f64::INFINITY;
        for k in 0..8 {
            let delta = 2.0 * 0.5f64.powi(k);
            let p = profile(move |r| plateau(r, 1.0, 1.0 + delta));
            let rep = hardy_bound_check(&p, 0.05).unwrap();
            assert!(rep.ratio < last && rep.ratio <= rep.universal_bound, "{k}: {rep:?}");
            last = rep.ratio;
        }
    }

    #[test]
    fn phi_regimes() {
        for r in [0.1, 1.0, 7.0] {
            let t = phi_regime_table(r, 400).unwrap();
            assert!(t.pass, "{t:?}");
        }
        let big_r: f64 = 3.0;
        let rho = 4.0 * big_r * big_r / 9.0;
        assert!((1.5 * rho.sqrt() - big_r).abs() < 1e-15);
        let far: f64 = 1e8;
        assert!(((1.5 * far.sqrt() - big_r) / far.sqrt() - 1.5).abs() < 1e-3);
        let t = phi_regime_table(big_r, 400).unwrap();
        assert!((t.rows[0].max_ratio - 1.0).abs() < 1e-2);
        assert!(phi_regime_table(0.0, 10).is_err());
    }
}
