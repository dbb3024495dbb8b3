//! Littlewood–Paley projections built from a smooth `exp(-1/x)` glue.

use serde::Serialize;

use super::{GridSpec, SpectralField};

/// Inner and outer radii of the transition of [`low_pass`].
const LOW_PASS_ONE: f64 = 1.5;
const LOW_PASS_ZERO: f64 = 8.0 / 3.0;

/// Smooth monotone step: 0 for `t <= 0`, 1 for `t >= 1`, `C^inf` in between.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

/// Smooth plateau: 1 on `[0, one_until]`, 0 on `[zero_from, inf)`.
pub fn plateau(r: f64, one_until: f64, zero_from: f64) -> f64 {
    1.0 - smooth_step((r - one_until) / (zero_from - one_until))
}

/// Low-pass profile: 1 on `[0, 3/2]`, 0 beyond `8/3`.
pub fn low_pass(r: f64) -> f64 {
    plateau(r, LOW_PASS_ONE, LOW_PASS_ZERO)
}

/// Dyadic bump `theta(r) = low_pass(r) - low_pass(2r)`, supported in `[3/4, 8/3]`.
pub fn theta(r: f64) -> f64 {
    low_pass(r) - low_pass(2.0 * r)
}

/// `Theta(r) = sum_{j<0} theta(r / 2^j) = low_pass(2r)`.
pub fn big_theta(r: f64) -> f64 {
    low_pass(2.0 * r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpKind {
    /// `P_j`
    Annulus,
    /// `P_{<j}`
    Below,
    /// `P_{>=j}`
    AtOrAbove,
}

/// Applies `P_j`, `P_{<j}` or `P_{>=j}`.
pub fn lp_project(f: &SpectralField, j: i32, kind: LpKind) -> SpectralField {
    let s = 2f64.powi(j);
    match kind {
        LpKind::Annulus => f.apply_radial(|r| theta(r / s), true),
        LpKind::Below => f.apply_radial(|r| big_theta(r / s), false),
        LpKind::AtOrAbove => f.apply_radial(|r| 1.0 - big_theta(r / s), false),
    }
}

/// Range of `j` whose annuli meet the nonzero grid modes; summing `P_j` over it
/// reproduces the identity on every nonzero mode.
pub fn lp_range(f: &SpectralField) -> (i32, i32) {
    let g = f.grid();
    let kmin = g.k0();
    let kmax = g.k_nyquist() * std::f64::consts::SQRT_2;
    let lo = (kmin * 3.0 / 8.0).log2().floor() as i32;
    let hi = (kmax / 0.75).log2().ceil() as i32;
    (lo, hi)
}


/// `max |sum_{j in lp_range} theta(|k| / 2^j) - 1|` over the nonzero modes.
pub fn partition_residual(grid: &GridSpec) -> f64 {
    let (lo, hi) = lp_range(&SpectralField::zeros(*grid));
    let n = grid.n();
    let mut worst: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            if a == 0 && b == 0 {
                continue;
            }
            let k = grid.wavevector(a, b);
            let r = k[0].hypot(k[1]);
            let s: f64 = (lo..=hi).map(|j| theta(r / 2f64.powi(j))).sum();
            worst = worst.max((s - 1.0).abs());
        }
    }
    worst
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BernsteinRow {
    pub j: i32,
    /// `||P_j delta||_inf / (2^j ||P_j delta||_2)`
    pub sup_ratio: f64,
    /// `||Lambda P_j delta||_2 / (2^j ||P_j delta||_2)`
    pub lambda_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BernsteinReport {
    pub rows: Vec<BernsteinRow>,
    pub partition_residual: f64,
    /// `max / min` of each ratio over the rows.
    pub sup_spread: f64,
    pub lambda_spread: f64,
}

/// Levels whose annulus holds at least a few grid shells and stays inside
/// the Nyquist disc: `(3/4) 2^j >= 4 k0` and `(8/3) 2^j <= k_nyquist`.
pub fn resolvable_levels(grid: &GridSpec) -> Vec<i32> {
    let k_cut = grid.k_nyquist();
    (-40..40).filter(|&j| {
        let s = 2f64.powi(j);
        0.75 * s >= 4.0 * grid.k0() && 8.0 / 3.0 * s <= k_cut
    })
    .collect()
}

/// Bernstein ratios of `P_j delta` (the extremal case for `L^2 -> L^inf`) over
/// the resolvable levels, computed from the coefficients directly.
pub fn bernstein_sweep(grid: &GridSpec) -> BernsteinReport {
    let n = grid.n();
    let l = grid.box_length();
    let mut rows = Vec::new();
    for j in resolvable_levels(grid) {
        let s = 2f64.powi(j);
        let (mut sum, mut sq, mut lam) = (0.0, 0.0, 0.0);
        for a in 0..n {
            for b in 0..n {
                let k = grid.wavevector(a, b);
                let r = k[0].hypot(k[1]);
                let t = theta(r / s);
                sum += t;
                sq += t * t;
                lam += (r * t).powi(2);
            }
        }
        // delta has coefficients L^-2; sup is attained at the origin
        let sup = sum / (l * l);
        let l2 = sq.sqrt() / l;
        rows.push(BernsteinRow { j, sup_ratio: sup / (s * l2), lambda_ratio: lam.sqrt() / (s * sq.sqrt()) });
    }
    let spread = |f: fn(&BernsteinRow) -> f64| {
        let (lo, hi) = rows.iter().map(f).fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(v), b.max(v)));
        hi / lo
    };
    let sup_spread = spread(|r| r.sup_ratio);
    let lambda_spread = spread(|r| r.lambda_ratio);
    BernsteinReport { rows, partition_residual: partition_residual(grid), sup_spread, lambda_spread }
}
