use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::bessel::j_unchecked;
use super::profile::{circular_harmonics, gaussian_transform, uniform_nodes, FourierInput, HarmonicDecomposition, RadialProfile};
use super::quadrature::{integrate, QuadOptions};
use crate::fit::loglog_fit;
use crate::spectral::{omega, sigma, SpectralField};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PointValue {
    pub value: Complex64,
    pub error: f64,
    pub panels: usize,
}

/// `(2r/3t)^2`, where `t (3/2) rho^{1/2} - r` vanishes.
pub fn stationary_point(t: f64, r: f64) -> f64 {
    (2.0 * r / (3.0 * t)).powi(2)
}

/// Forced breakpoints of the radial integral: the stationary point, the
/// regime boundaries `2R^2/9`, `10R^2` with `R = r/t`, `1/r` and `t^{-2/3}`.
pub fn radial_breakpoints(t: f64, r: f64, rho_max: f64) -> Vec<f64> {
    let mut b = vec![0.0, rho_max];
    if t > 0.0 {
        let big_r = r / t;
        b.extend([stationary_point(t, r), 2.0 * big_r * big_r / 9.0, 10.0 * big_r * big_r, t.powf(-2.0 / 3.0)]);
    }
    if r > 0.0 {
        b.push(1.0 / r);
    }
    b.retain(|x| x.is_finite() && *x >= 0.0 && *x <= rho_max);
    b.sort_by(|a, c| a.partial_cmp(c).unwrap());
    b.dedup_by(|a, c| (*a - *c).abs() <= 1e-12 * rho_max);
    // split so that each piece carries at most ~2 pi of phase
    let mut out = vec![b[0]];
    for w in b.windows(2) {
        let var = t * (w[1].powf(1.5) - w[0].powf(1.5)) + r * (w[1] - w[0]);
        let pieces = (var / (2.0 * PI)).ceil().max(1.0) as usize;
        for k in 1..=pieces {
            out.push(w[0] + (w[1] - w[0]) * k as f64 / pieces as f64);
        }
    }
    out
}

/// `int_0^inf J_m(r rho) exp(i t rho^{3/2}) f^_m(rho) rho d rho` (Bessel in the
/// normalisation of [`super::bessel_j`]).
pub fn radial_integral(profile: &RadialProfile, m: i32, t: f64, r: f64, abs_tol: f64) -> Result<PointValue> {
    let scale = 2.0 * PI;
    let phase_m = match m.unsigned_abs() % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    let order = m.unsigned_abs();
    let f = |rho: f64| {
        let j = j_unchecked(order, r * rho);
        profile.eval(rho) * Complex64::from_polar(rho * j, t * rho.powf(1.5))
    };
    let opts = QuadOptions { abs_tol, rel_tol: 1e-10, max_panels: 50_000 };
    let res = integrate(f, &radial_breakpoints(t, r, profile.rho_max()), opts)
        .map_err(|e| Error::Quadrature(format!("m = {m}, t = {t}, r = {r}: {e}")))?;
    Ok(PointValue { value: res.value * phase_m * scale, error: res.error * scale, panels: res.panels })
}

/// Scale used to set absolute tolerances: `sum_m int |f^_m| rho d rho`.
pub fn l1_scale(d: &HarmonicDecomposition) -> Result<f64> {
    let mut s = 0.0;
    for p in d.profiles.values() {
        s += p.weighted_integral(|r| p.eval(r).norm())?;
    }
    Ok(s)
}

/// `(e^{i t Lambda^{3/2}} f)(r cos theta0, r sin theta0)` with
/// `f(x) = (2 pi)^-2 int f^(xi) exp(i x.xi) d xi`.
pub fn propagate_point(d: &HarmonicDecomposition, t: f64, r: f64, theta0: f64) -> Result<PointValue> {
    let scale = l1_scale(d)?;
    propagate_point_with(d, t, r, theta0, 1e-11 * scale.max(1e-300))
}

pub fn propagate_point_with(d: &HarmonicDecomposition, t: f64, r: f64, theta0: f64, abs_tol: f64) -> Result<PointValue> {
    if !(t >= 0.0) || !(r >= 0.0) {
        return Err(Error::Config(format!("need t >= 0 and r >= 0, got t = {t}, r = {r}")));
    }
    let norm = 1.0 / (4.0 * PI * PI);
    let per = abs_tol / d.profiles.len().max(1) as f64;
    let mut out = PointValue { value: Complex64::default(), error: 0.0, panels: 0 };
    for (&m, p) in &d.profiles {
        if p.values().iter().all(|v| v.norm() == 0.0) {
            continue;
        }
        let v = radial_integral(p, m, t, r, per)?;
        out.value += v.value * Complex64::from_polar(norm, m as f64 * theta0);
        out.error += v.error * norm;
        out.panels += v.panels;
    }
    Ok(out)
}

/// Largest group speed `(3/2) rho^{1/2}` carried by the data.
pub fn max_group_speed(d: &HarmonicDecomposition) -> f64 {
    1.5 * d.effective_rho_max(1e-10).sqrt()
}

#[derive(Clone, Debug, Serialize)]
pub struct RScan {
    /// Coarse samples in `[0, r_max(t)]`.
    pub samples: usize,
    /// `r_max(t) = speed_factor * max_group_speed * t + offset`.
    pub speed_factor: f64,
    pub offset: f64,
    /// Angles `theta0`; ignored for a purely radial decomposition.
    pub angles: usize,
    /// Golden-section refinements around the best coarse samples.
    pub refine: usize,
}

impl Default for RScan {
    fn default() -> Self {
        Self { samples: 160, speed_factor: 1.2, offset: 8.0, angles: 12, refine: 3 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub beta: f64,
    pub times: Vec<f64>,
    pub sup_norms: Vec<f64>,
    /// Where each supremum was found.
    pub argmax_r: Vec<f64>,
    pub rhs_norm: f64,
    pub fitted_exponent: f64,
    pub r_squared: f64,
    /// `sup t^{1 - 2 beta / 3} / rhs_norm` per time.
    pub ratios: Vec<f64>,
    pub ratio_max: f64,
    /// True when the ratios increase at every step.
    pub ratio_monotone_growth: bool,
}

impl DecayReport {
    pub fn expected_exponent(&self) -> f64 {
        -1.0 + 2.0 * self.beta / 3.0
    }
}

fn abs_at(d: &HarmonicDecomposition, t: f64, r: f64, th: f64, tol: f64) -> Result<f64> {
    Ok(propagate_point_with(d, t, r, th, tol)?.value.norm())
}

/// `sup_x |e^{i t Lambda^{3/2}} f|` over the scan, with its radius.
pub fn sup_at_time(d: &HarmonicDecomposition, t: f64, scan: &RScan) -> Result<(f64, f64)> {
    let tol = 1e-11 * l1_scale(d)?.max(1e-300);
    let r_max = scan.speed_factor * max_group_speed(d) * t + scan.offset;
    let radial = d.profiles.iter().all(|(&m, p)| m == 0 || p.values().iter().all(|v| v.norm() == 0.0));
    let angles: Vec<f64> =
        if radial { vec![0.0] } else { (0..scan.angles).map(|k| 2.0 * PI * k as f64 / scan.angles as f64).collect() };
    let n = scan.samples.max(4);
    let h = r_max / n as f64;
    let mut best = (0.0, 0.0, 0.0);
    let mut coarse = Vec::new();
    for &th in &angles {
        for i in 0..=n {
            let r = h * i as f64;
            let v = abs_at(d, t, r, th, tol)?;
            coarse.push((v, r, th));
        }
    }
    coarse.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    for &(v, r0, th) in coarse.iter().take(scan.refine.max(1)) {
        if v > best.0 {
            best = (v, r0, th);
        }
        // golden section on [r0 - h, r0 + h] for the maximum
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = ((r0 - h).max(0.0), r0 + h);
        let mut c = b - g * (b - a);
        let mut e = a + g * (b - a);
        let mut fc = abs_at(d, t, c, th, tol)?;
        let mut fe = abs_at(d, t, e, th, tol)?;
        for _ in 0..30 {
            if fc > fe {
                b = e;
                e = c;
                fe = fc;
                c = b - g * (b - a);
                fc = abs_at(d, t, c, th, tol)?;
            } else {
                a = c;
                c = e;
                fc = fe;
                e = a + g * (b - a);
                fe = abs_at(d, t, e, th, tol)?;
            }
        }
        for (fv, rv) in [(fc, c), (fe, e)] {
            if fv > best.0 {
                best = (fv, rv, th);
            }
        }
    }
    Ok((best.0, best.1))
}

/// Sup norms at each time, the log-log exponent and the ratios against the
/// `beta`-weighted right side with `Y(D) = Lambda^iota + Lambda^-iota`.
///
/// Decompositions coming from a box field are refused beyond
/// `t = 0.5 L / max group speed`.
pub fn sup_norm_decay(d: &HarmonicDecomposition, times: &[f64], scan: &RScan, beta: f64, iota: f64) -> Result<DecayReport> {
    if times.len() < 2 || times.iter().any(|&t| !(t >= 1.0)) {
        return Err(Error::Config("decay fits need at least two times, all >= 1".into()));
    }
    if let Some(l) = d.source_box {
        let horizon = 0.5 * l / max_group_speed(d);
        if let Some(&t) = times.iter().find(|&&t| t > horizon) {
            return Err(Error::Config(format!("time {t} is beyond the horizon {horizon:.3} of the source box")));
        }
    }
    let rhs = weighted_rhs_norm(d, beta, iota)?;
    let mut sups = Vec::with_capacity(times.len());
    let mut arg = Vec::with_capacity(times.len());
    for &t in times {
        let (s, r) = sup_at_time(d, t, scan)?;
        sups.push(s);
        arg.push(r);
    }
    let fit = loglog_fit(times, &sups)?;
    let ratios: Vec<f64> = times.iter().zip(&sups).map(|(t, s)| s * t.powf(1.0 - 2.0 * beta / 3.0) / rhs).collect();
    let ratio_max = ratios.iter().copied().fold(0.0, f64::max);
    let growth = ratios.windows(2).all(|w| w[1] > w[0]);
    Ok(DecayReport {
        beta,
        times: times.to_vec(),
        sup_norms: sups,
        argmax_r: arg,
        rhs_norm: rhs,
        fitted_exponent: fit.slope,
        r_squared: fit.r_squared,
        ratios,
        ratio_max,
        ratio_monotone_growth: growth,
    })
}

/// Radial data `f^ = |xi|^{2 iota - 1/2 - beta} G^` with `G` the Gaussian of
/// the given width: an inverse power at spatial infinity whose
/// `beta`-weighted right side is finite and whose sup decays like
/// `t^{-1 + 2 beta / 3 - 2 iota / 3}`.
pub fn beta_family(width: f64, beta: f64, iota: f64, nodes: usize) -> Result<HarmonicDecomposition> {
    if !(width > 0.0) || !(0.0..0.5).contains(&beta) && beta != 0.5 {
        return Err(Error::Config(format!("need width > 0 and beta in [0, 1/2], got {width}, {beta}")));
    }
    let g = gaussian_transform(width, 1.0);
    let input = FourierInput::analytic_with_power(2.0 * iota - 0.5 - beta, g);
    circular_harmonics(&input, 0, &uniform_nodes(12.0 / width, nodes))
}

/// `||Y(D) Lambda^{beta - 1/2} Sigma^j Omega^k f||_2` for `j <= 1`, `k <= 3`,
/// indexed `[j][k]`, computed on the Fourier side where `Omega` is `i m` on
/// harmonic `m` and `Sigma` is `-(rho d_rho + 2)`.
pub fn weighted_rhs_terms(d: &HarmonicDecomposition, beta: f64, iota: f64) -> Result<[[f64; 4]; 2]> {
    let w = move |rho: f64| (rho.powf(iota) + rho.powf(-iota)) * rho.powf(beta - 0.5);
    let mut out = [[0.0; 4]; 2];
    for (&m, p) in &d.profiles {
        if p.values().iter().all(|v| v.norm() == 0.0) {
            continue;
        }
        let e0 = p.weighted_integral(|r| (w(r) * p.eval(r).norm()).powi(2) * r)?;
        let e1 = p.weighted_integral(|r| (w(r) * (p.euler_derivative(r) + p.eval(r) * 2.0).norm()).powi(2) * r)?;
        if !(e0.is_finite() && e1.is_finite()) {
            return Err(Error::Quadrature(format!("weighted norm of harmonic {m} diverges")));
        }
        for k in 0..4 {
            let mk = (m as f64).abs().powi(2 * k as i32);
            out[0][k] += mk * e0;
            out[1][k] += mk * e1;
        }
    }
    // ||g||_{L^2(R^2)} = (2 pi)^-1 ||g^||_2 and ||g^||^2 = 2 pi sum_m int |g^_m|^2 rho d rho
    for row in out.iter_mut() {
        for v in row.iter_mut() {
            *v = (2.0 * PI * *v).sqrt() / (2.0 * PI);
        }
    }
    Ok(out)
}

/// `sum_{j <= 1, k <= 3} ||Y(D) Lambda^{beta - 1/2} Sigma^j Omega^k f||_2`.
pub fn weighted_rhs_norm(d: &HarmonicDecomposition, beta: f64, iota: f64) -> Result<f64> {
    Ok(weighted_rhs_terms(d, beta, iota)?.iter().flatten().sum())
}

/// The same terms for a box field using the grid operators `Sigma`, `Omega`,
/// `Lambda^s` and `Y(D)` directly.
pub fn grid_rhs_terms(f: &SpectralField, beta: f64, iota: f64) -> [[f64; 4]; 2] {
    let mut out = [[0.0; 4]; 2];
    let mut g = [f.clone(), sigma(f)];
    for k in 0..4 {
        for j in 0..2 {
            out[j][k] = g[j].lambda_pow(beta - 0.5).y_weight(iota).l2_norm();
            g[j] = omega(&g[j]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::linear_propagate;
    use crate::spectral::{gaussian, GridSpec};

    fn gaussian_decomp(width: f64) -> HarmonicDecomposition {
        let nodes = uniform_nodes(12.0 / width, 2400);
        circular_harmonics(&FourierInput::analytic(gaussian_transform(width, 1.0)), 0, &nodes).unwrap()
    }

    #[test]
    fn breakpoints_contain_the_stationary_point() {
        let (t, r) = (5.0, 12.0);
        let rho = stationary_point(t, r);
        let big_r = r / t;
        assert!((rho - 4.0 * big_r * big_r / 9.0).abs() < 1e-14);
        assert!((t * 1.5 * rho.sqrt() - r).abs() < 1e-12);
        let b = radial_breakpoints(t, r, 40.0);
        assert!(b.iter().any(|&x| (x - rho).abs() < 1e-14));
        assert!(b.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn value_at_origin_and_time_zero() {
        let d = gaussian_decomp(1.0);
        let v = propagate_point(&d, 0.0, 0.0, 0.0).unwrap();
        assert!((v.value - 1.0).norm() < 1e-9, "{v:?}");
        let v = propagate_point(&d, 0.0, 1.5, 0.3).unwrap();
        assert!((v.value.re - (-1.125f64).exp()).abs() < 1e-9, "{v:?}");
    }

    fn shifted(c: [f64; 2], w: f64, laps: i32) -> FourierInput {
        let g = gaussian_transform(w, 1.0);
        FourierInput::analytic(move |xi| {
            let r2 = xi[0] * xi[0] + xi[1] * xi[1];
            g(xi) * Complex64::from_polar((-r2).powi(laps), -(xi[0] * c[0] + xi[1] * c[1]))
        })
    }

    // periodic images of the algebraic tail ~ t |x|^{-7/2} limit the box side
    #[test]
    fn agrees_with_box_propagation() {
        let grid = GridSpec::new(512, 160.0).unwrap();
        let d = gaussian_decomp(1.0);
        let c = [0.8, -0.5];
        let dc = circular_harmonics(&shifted(c, 0.9, 0), 16, &uniform_nodes(9.0 / 0.9, 2000)).unwrap();
        let fields = [gaussian(grid, [0.0, 0.0], 1.0, 1.0), gaussian(grid, c, 0.9, 1.0)];
        for t in [0.5, 2.0] {
            for (dec, field) in [&d, &dc].into_iter().zip(&fields) {
                let g = linear_propagate(field, -t).to_complex_values();
                let mut worst: f64 = 0.0;
                for (da, db) in [(0, 0), (2, 0), (6, 3), (11, -4), (-6, 8)] {
                    let (a, b) = ((256 + da) as usize, (256 + db) as usize);
                    let x = grid.coord(a);
                    let y = grid.coord(b);
                    let v = propagate_point(dec, t, x.hypot(y), y.atan2(x)).unwrap();
                    worst = worst.max((v.value - g[a * 512 + b]).norm());
                }
                assert!(worst < 1e-6, "t {t}: {worst}");
            }
        }
    }

    #[test]
    fn mass_is_conserved_on_a_large_disc() {
        let d = gaussian_decomp(1.0);
        let mass = |t: f64| {
            let rmax = 10.0 + 6.0 * t;
            let n = 600;
            let h = rmax / n as f64;
            (0..=n)
                .map(|i| {
                    let r = h * i as f64;
                    let v = propagate_point(&d, t, r, 0.0).unwrap().value.norm_sqr();
                    let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                    w * v * r * h * 2.0 * PI
                })
                .sum::<f64>()
        };
        let m0 = PI;
        for t in [0.0, 2.0, 5.0] {
            assert!((mass(t) - m0).abs() < 0.01 * m0, "t {t}: {}", mass(t));
        }
    }

    #[test]
    fn fourier_side_weights_match_grid_operators() {
        // f^ vanishes to fourth order at zero so the box sum is spectrally accurate
        let grid = GridSpec::new(128, 40.0).unwrap();
        let (w, c) = (1.0, [0.6, -0.4]);
        let f = gaussian(grid, c, w, 1.0).laplacian().laplacian();
        let d = circular_harmonics(&shifted(c, w, 2), 20, &uniform_nodes(11.0, 2200)).unwrap();
        for (beta, iota) in [(0.0, 0.05), (0.5, 0.05), (0.25, 0.1)] {
            let a = weighted_rhs_terms(&d, beta, iota).unwrap();
            let b = grid_rhs_terms(&f, beta, iota);
            for j in 0..2 {
                for k in 0..4 {
                    assert!((a[j][k] - b[j][k]).abs() <= 1e-6 * b[j][k].max(1e-3), "beta {beta} j {j} k {k}: {} {}", a[j][k], b[j][k]);
                }
            }
        }
    }

    #[test]
    fn radial_terms_and_dilations() {
        let d = gaussian_decomp(1.0);
        let t = weighted_rhs_terms(&d, 0.0, 0.05).unwrap();
        for j in 0..2 {
            assert!(t[j][0] > 0.0);
            for k in 1..4 {
                assert_eq!(t[j][k], 0.0);
            }
        }
        // f(lambda x): f^ -> lambda^-2 f^(xi / lambda); with iota = 0 every term scales as lambda^{beta - 3/2}
        let beta = 0.25;
        let lam: f64 = 1.7;
        let base = weighted_rhs_terms(&gaussian_decomp(1.0), beta, 0.0).unwrap();
        let dil = weighted_rhs_terms(&gaussian_decomp(1.0 / lam), beta, 0.0).unwrap();
        for j in 0..2 {
            let want = base[j][0] * lam.powf(beta - 1.5);
            assert!((dil[j][0] - want).abs() < 1e-8 * want, "{j}: {} {want}", dil[j][0]);
        }
    }

    #[test]
    fn decay_exponents_over_a_short_window() {
        let times = [4.0, 8.0, 16.0];
        let scan = RScan { samples: 60, ..Default::default() };
        let bump = gaussian_decomp(1.0);
        let r = sup_norm_decay(&bump, &times, &scan, 0.0, 0.05).unwrap();
        assert!((r.fitted_exponent + 1.0).abs() < 0.15, "{r:?}");
        let f = beta_family(1.0, 0.5, 0.05, 1200).unwrap();
        let r = sup_norm_decay(&f, &times, &scan, 0.5, 0.05).unwrap();
        assert!((r.fitted_exponent - r.expected_exponent()).abs() < 0.15, "{r:?}");
        assert!(sup_norm_decay(&f, &[0.5, 2.0], &scan, 0.5, 0.05).is_err());
    }
}
