//! Bilinear Fourier multipliers `T_m(f, g)^(xi) = sum_eta m(xi, eta) f^(eta) g^(xi - eta)`
//! and probes of their `L^q x L^r -> L^p` bounds.
//!
//! The sum is the non-periodic discrete convolution: pairs whose difference
//! mode falls outside the grid contribute nothing, and the output is dealiased.
//! For dealiased inputs this coincides with the pseudo-spectral product.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::fit::linear_fit;
use crate::resonance::{BilinearSymbol, SymbolClass};
use crate::rng::{self, ProbeRng};
use crate::spectral::lp::theta;
use crate::spectral::{gaussian, lp_project, GridSpec, LpKind, NormExponent, SpectralField};
use crate::{Error, Result};

/// Largest `n` accepted by the naive sum unless the cap is lifted.
pub const NAIVE_N_CAP: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanMode {
    /// Every pair `(xi, eta)`; the dyadic cutoff, if any, multiplies the symbol.
    NaiveFull,
    /// Only pairs inside the support of the dyadic cutoff `theta(|(xi, eta)| / 2^j)`.
    DyadicLocalized,
}

#[derive(Clone, Debug)]
pub struct PseudoProductPlan {
    pub grid: GridSpec,
    pub symbol: BilinearSymbol,
    pub mode: PlanMode,
    pub dyadic_j: Option<i32>,
    pub n_cap: usize,
}

impl PseudoProductPlan {
    pub fn new(grid: GridSpec, symbol: BilinearSymbol) -> Self {
        Self { grid, symbol, mode: PlanMode::NaiveFull, dyadic_j: None, n_cap: NAIVE_N_CAP }
    }

    /// Restricts the symbol to `theta(|(xi, eta)| / 2^j) m(xi, eta)`.
    pub fn localized(mut self, j: i32, mode: PlanMode) -> Self {
        self.dyadic_j = Some(j);
        self.mode = mode;
        self
    }

    pub fn with_cap(mut self, n_cap: usize) -> Self {
        self.n_cap = n_cap;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.grid.n() > self.n_cap {
            return Err(Error::Config(format!(
                "naive pseudo-product is O(n^4); n = {} exceeds the cap {}",
                self.grid.n(),
                self.n_cap
            )));
        }
        if self.mode == PlanMode::DyadicLocalized && self.dyadic_j.is_none() {
            return Err(Error::Config("dyadic_localized mode needs dyadic_j".into()));
        }
        Ok(())
    }
}

/// `T_m(f, g)` for the plan's symbol.
pub fn t_m(f: &SpectralField, g: &SpectralField, plan: &PseudoProductPlan) -> Result<SpectralField> {
    f.check_grid(g)?;
    if *f.grid() != plan.grid {
        return Err(Error::GridMismatch);
    }
    plan.validate()?;
    let grid = plan.grid;
    let n = grid.n();
    let k0 = grid.k0();
    let half = (n / 2) as i64;
    let fc = f.coeffs();
    let gc = g.coeffs();
    let fl: Vec<(i64, i64, Complex64)> = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .filter(|&(a, b)| fc[a * n + b] != Complex64::default())
        .map(|(a, b)| (grid.mode(a), grid.mode(b), fc[a * n + b]))
        .collect();
    let scale = plan.dyadic_j.map(|j| 2f64.powi(j));
    let (lo, hi) = scale.map_or((0.0, f64::INFINITY), |s| (0.75 * s, 8.0 / 3.0 * s));
    let mut out = vec![Complex64::default(); grid.len()];
    for a in 0..n {
        for b in 0..n {
            if !grid.keeps(a, b) {
                continue;
            }
            let (ma, mb) = (grid.mode(a), grid.mode(b));
            let xi = [k0 * ma as f64, k0 * mb as f64];
            let mut acc = Complex64::default();
            for &(p, q, fv) in &fl {
                let (r, s) = (ma - p, mb - q);
                if r < -half || r >= half || s < -half || s >= half {
                    continue;
                }
                let gv = gc[grid.index_of(r).unwrap() * n + grid.index_of(s).unwrap()];
                if gv == Complex64::default() {
                    continue;
                }
                let eta = [k0 * p as f64, k0 * q as f64];
                let mut w = Complex64::new(1.0, 0.0);
                if let Some(s) = scale {
                    let rad = (xi[0] * xi[0] + xi[1] * xi[1] + eta[0] * eta[0] + eta[1] * eta[1]).sqrt();
                    if plan.mode == PlanMode::DyadicLocalized && (rad <= lo || rad >= hi) {
                        continue;
                    }
                    w = Complex64::new(theta(rad / s), 0.0);
                    if w.re == 0.0 {
                        continue;
                    }
                }
                let m = plan.symbol.eval(xi, eta);
                if !(m.re.is_finite() && m.im.is_finite()) {
                    return Err(Error::NonFiniteSymbol(xi[0], xi[1]));
                }
                acc += w * m * fv * gv;
            }
            out[a * n + b] = acc;
        }
    }
    SpectralField::from_coeffs(grid, out)
}

/// Convenience wrapper for the full (unlocalised) naive sum.
pub fn t_m_naive(f: &SpectralField, g: &SpectralField, symbol: &BilinearSymbol) -> Result<SpectralField> {
    t_m(f, g, &PseudoProductPlan::new(*f.grid(), symbol.clone()))
}

/// Symbol of the adjoint in the first slot: `<T_m(f, g), w> = <f, T_{m*}(w, conj g)>`
/// with `m*(xi, eta) = conj(m(eta, xi))`.
pub fn adjoint_symbol(m: &BilinearSymbol) -> BilinearSymbol {
    let inner = m.clone();
    BilinearSymbol::new(format!("{}_adjoint", m.name), m.degree, None, move |xi, eta| inner.eval(eta, xi).conj())
}

/// `|<T_m(f, g), w> - <f, T_{m*}(w, conj g)>| / |<T_m(f, g), w>|`.
pub fn duality_defect(m: &BilinearSymbol, f: &SpectralField, g: &SpectralField, w: &SpectralField) -> Result<f64> {
    let lhs = t_m_naive(f, g, m)?.inner(w)?;
    let rhs = f.inner(&t_m_naive(w, &g.conj(), &adjoint_symbol(m))?)?;
    Ok((lhs - rhs).norm() / lhs.norm().max(f64::MIN_POSITIVE))
}

fn inverse_exponent(p: NormExponent) -> f64 {
    match p {
        NormExponent::Two => 0.5,
        NormExponent::Infinity => 0.0,
    }
}

fn label(p: NormExponent) -> &'static str {
    match p {
        NormExponent::Two => "2",
        NormExponent::Infinity => "inf",
    }
}

fn check_holder(p: NormExponent, q: NormExponent, r: NormExponent) -> Result<()> {
    if (inverse_exponent(p) - inverse_exponent(q) - inverse_exponent(r)).abs() > 1e-12 {
        return Err(Error::Config(format!(
            "exponents must satisfy 1/p = 1/q + 1/r, got (p, q, r) = ({}, {}, {})",
            label(p),
            label(q),
            label(r)
        )));
    }
    Ok(())
}

/// Sum of a few Gaussian wave packets with carriers `|k| ~ 2^j`, centred well
/// inside the box. `j = None` gives plain (unmodulated) bumps.
pub fn random_packet(grid: GridSpec, r: &mut ProbeRng, j: Option<i32>) -> SpectralField {
    let l = grid.box_length();
    let mut bumps = Vec::new();
    for _ in 0..3 {
        let c = [r.gen_range(-l / 8.0..l / 8.0), r.gen_range(-l / 8.0..l / 8.0)];
        let w = r.gen_range(0.05..0.1) * l;
        let amp = r.gen_range(0.5..1.5) * if r.gen_bool(0.5) { 1.0 } else { -1.0 };
        let k = j.map(|j| {
            let mag = 2f64.powi(j) * r.gen_range(0.5..1.0);
            let a: f64 = r.gen_range(0.0..2.0 * std::f64::consts::PI);
            [mag * a.cos(), mag * a.sin()]
        });
        let ph: f64 = r.gen_range(0.0..2.0 * std::f64::consts::PI);
        bumps.push((c, w, amp, k, ph));
    }
    SpectralField::from_fn(grid, |x, y| {
        bumps
            .iter()
            .map(|&(c, w, amp, k, ph)| {
                let d2 = (x - c[0]).powi(2) + (y - c[1]).powi(2);
                let carrier = k.map_or(1.0, |k| (k[0] * x + k[1] * y + ph).cos());
                amp * (-0.5 * d2 / (w * w)).exp() * carrier
            })
            .sum()
    })
    .dealiased()
}

/// Trial input at dyadic level `j`. Even `trial` indices give a random-phase
/// field on the annulus `theta(|k| / 2^j)`; odd ones give `P_j` of a sum of
/// narrow Gaussian bumps (a superposition of level-`j` wavelets).
pub fn random_level_field(grid: GridSpec, r: &mut ProbeRng, j: i32, trial: usize) -> SpectralField {
    let s = 2f64.powi(j);
    let f = if trial % 2 == 0 {
        let mut f = SpectralField::from_spectrum(grid, |k| Complex64::new(theta(k[0].hypot(k[1]) / s), 0.0));
        for c in f.coeffs_mut() {
            if c.re != 0.0 {
                *c *= Complex64::from_polar(r.gen_range(0.5..1.5), r.gen_range(0.0..2.0 * std::f64::consts::PI));
            }
        }
        f.symmetrize();
        f
    } else {
        let l = grid.box_length();
        let mut acc = SpectralField::zeros(grid);
        for _ in 0..3 {
            let c = [r.gen_range(-l / 8.0..l / 8.0), r.gen_range(-l / 8.0..l / 8.0)];
            acc = &acc + &gaussian(grid, c, r.gen_range(0.5..1.0) * grid.dx(), r.gen_range(-1.0..1.0));
        }
        lp_project(&acc, j, LpKind::Annulus)
    };
    f.dealiased()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CmProbeConfig {
    pub j_min: i32,
    pub j_max: i32,
    pub p: NormExponent,
    pub q: NormExponent,
    pub r: NormExponent,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CmRow {
    pub j: i32,
    pub max_ratio: f64,
    pub mean_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CmProbeReport {
    pub symbol: String,
    pub p: &'static str,
    pub q: &'static str,
    pub r: &'static str,
    pub rows: Vec<CmRow>,
    /// Slope of `log2 max_ratio` against `j`; zero when all ratios vanish.
    pub trend_slope: f64,
}

/// Ratios `||T_mu(f, g)||_p / (2^{beta j} ||f||_q ||g||_r)` with
/// `mu = theta(|(xi, eta)| / 2^j) m`, over random inputs at frequency `~2^j`
/// (see [`random_level_field`]).
pub fn cm_bound_probe(symbol: &BilinearSymbol, grid: GridSpec, cfg: &CmProbeConfig) -> Result<CmProbeReport> {
    if cfg.j_max < cfg.j_min {
        return Err(Error::Config("empty dyadic range".into()));
    }
    if cfg.trials == 0 {
        return Err(Error::Config("cm probe needs at least one trial".into()));
    }
    if let Some(c) = symbol.class {
        if c.c1 <= 0.0 || c.c2 <= 0.0 || c.c3 <= 0.0 {
            return Err(Error::Config(format!("{} does not vanish on all three rays", symbol.name)));
        }
    }
    check_holder(cfg.p, cfg.q, cfg.r)?;
    let mut rows = Vec::new();
    for j in cfg.j_min..=cfg.j_max {
        let plan = PseudoProductPlan::new(grid, symbol.clone()).localized(j, PlanMode::DyadicLocalized);
        let mut r = rng::seeded(cfg.seed ^ ((j as i64 as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)));
        let mut max: f64 = 0.0;
        let mut sum = 0.0;
        for trial in 0..cfg.trials {
            let f = random_level_field(grid, &mut r, j, trial);
            let g = random_level_field(grid, &mut r, j, trial);
            let t = t_m(&f, &g, &plan)?;
            let ratio = cfg.p.of(&t) / (2f64.powf(symbol.degree * j as f64) * cfg.q.of(&f) * cfg.r.of(&g));
            max = max.max(ratio);
            sum += ratio;
        }
        rows.push(CmRow { j, max_ratio: max, mean_ratio: sum / cfg.trials as f64 });
    }
    let trend_slope = if rows.iter().all(|r| r.max_ratio == 0.0) || rows.len() < 2 {
        0.0
    } else {
        let xs: Vec<f64> = rows.iter().map(|r| r.j as f64).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.max_ratio.log2()).collect();
        linear_fit(&xs, &ys)?.slope
    };
    Ok(CmProbeReport { symbol: symbol.name.clone(), p: label(cfg.p), q: label(cfg.q), r: label(cfg.r), rows, trend_slope })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorollaryConfig {
    pub sigma2: f64,
    pub sigma3: f64,
    pub kappa: f64,
    pub p: NormExponent,
    pub q: NormExponent,
    pub r: NormExponent,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorollaryReport {
    pub symbol: String,
    pub max_ratio: f64,
    pub ratios: Vec<f64>,
}

/// Right side `||f||_{W^{s2,q}} ||Y_k Lambda^{b-s2} g||_r + ||Y_k Lambda^{b-s3} f||_q ||g||_{W^{s3,r}}`
/// with homogeneous norms and `Y_k = Lambda^k + Lambda^-k`.
pub fn corollary_rhs(f: &SpectralField, g: &SpectralField, class: &SymbolClass, cfg: &CorollaryConfig) -> f64 {
    let y = |h: &SpectralField, s: f64| h.lambda_pow(s).y_weight(cfg.kappa);
    let b = class.beta;
    cfg.q.of(&f.lambda_pow(cfg.sigma2)) * cfg.r.of(&y(g, b - cfg.sigma2))
        + cfg.q.of(&y(f, b - cfg.sigma3)) * cfg.r.of(&g.lambda_pow(cfg.sigma3))
}

pub fn corollary_bound_probe(symbol: &BilinearSymbol, grid: GridSpec, cfg: &CorollaryConfig) -> Result<CorollaryReport> {
    let class = symbol
        .class
        .ok_or_else(|| Error::Config(format!("{} has no declared class", symbol.name)))?;
    if cfg.sigma2 >= class.c2 || cfg.sigma3 >= class.c3 {
        return Err(Error::Config(format!(
            "need sigma2 < c2 and sigma3 < c3, got {} / {} against {} / {}",
            cfg.sigma2, cfg.sigma3, class.c2, class.c3
        )));
    }
    check_holder(cfg.p, cfg.q, cfg.r)?;
    let mut r = rng::seeded(cfg.seed);
    let mut ratios = Vec::with_capacity(cfg.trials);
    for _ in 0..cfg.trials {
        let f = random_packet(grid, &mut r, None);
        let g = random_packet(grid, &mut r, None);
        let lhs = cfg.p.of(&t_m_naive(&f, &g, symbol)?);
        ratios.push(lhs / corollary_rhs(&f, &g, &class, cfg));
    }
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(CorollaryReport { symbol: symbol.name.clone(), max_ratio, ratios })
}
