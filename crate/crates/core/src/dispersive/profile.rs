use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::quadrature::{integrate, QuadOptions};
use crate::spectral::SpectralField;
use crate::{Error, Result};

/// Relative angular energy beyond `m_max` that is tolerated.
pub const ANGULAR_TAIL_TOL: f64 = 1e-6;

/// `f^(rho) = rho^power * s(rho)` with `s` interpolated by local cubics
/// through the four nearest nodes. Zero beyond the last node.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialProfile {
    rho_nodes: Vec<f64>,
    values: Vec<Complex64>,
    power: f64,
}

impl RadialProfile {
    pub fn new(rho_nodes: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        Self::with_power(rho_nodes, values, 0.0)
    }

    /// `values` samples the smooth factor `s`, not `f^` itself.
    pub fn with_power(rho_nodes: Vec<f64>, values: Vec<Complex64>, power: f64) -> Result<Self> {
        if rho_nodes.len() < 4 || rho_nodes.len() != values.len() {
            return Err(Error::Config(format!(
                "radial profile needs >= 4 nodes with one value each ({} nodes, {} values)",
                rho_nodes.len(),
                values.len()
            )));
        }
        if !(rho_nodes[0] > 0.0) || rho_nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("radial nodes must be positive and increasing".into()));
        }
        if !power.is_finite() || power <= -2.0 {
            return Err(Error::Config(format!("power {power} is not integrable against rho d rho")));
        }
        Ok(Self { rho_nodes, values, power })
    }

    /// Samples `s` on the nodes.
    pub fn from_fn(rho_nodes: Vec<f64>, power: f64, s: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = rho_nodes.iter().map(|&r| s(r)).collect();
        Self::with_power(rho_nodes, values, power)
    }

    pub fn rho_nodes(&self) -> &[f64] {
        &self.rho_nodes
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn rho_min(&self) -> f64 {
        self.rho_nodes[0]
    }

    pub fn rho_max(&self) -> f64 {
        *self.rho_nodes.last().expect("nodes")
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self { values: self.values.iter().map(|v| v * c).collect(), ..self.clone() }
    }

    fn stencil(&self, rho: f64) -> usize {
        let n = self.rho_nodes.len();
        let i = self.rho_nodes.partition_point(|&x| x <= rho);
        i.saturating_sub(2).min(n - 4)
    }

    /// `(s, s')` at `rho`.
    fn smooth(&self, rho: f64) -> (Complex64, Complex64) {
        let i0 = self.stencil(rho);
        let x = &self.rho_nodes[i0..i0 + 4];
        let y = &self.values[i0..i0 + 4];
        let mut v = Complex64::default();
        let mut d = Complex64::default();
        for j in 0..4 {
            let mut l = 1.0;
            let mut dl = 0.0;
            for k in 0..4 {
                if k == j {
                    continue;
                }
                let den = x[j] - x[k];
                // product rule for the derivative of the Lagrange basis
                dl = dl * (rho - x[k]) / den + l / den;
                l *= (rho - x[k]) / den;
            }
            v += y[j] * l;
            d += y[j] * dl;
        }
        (v, d)
    }

    pub fn eval(&self, rho: f64) -> Complex64 {
        if rho > self.rho_max() || rho < 0.0 {
            return Complex64::default();
        }
        let (s, _) = self.smooth(rho);
        if self.power == 0.0 {
            s
        } else {
            s * rho.powf(self.power)
        }
    }

    /// `d f^ / d rho`.
    pub fn derivative(&self, rho: f64) -> Complex64 {
        if rho > self.rho_max() || rho <= 0.0 {
            return Complex64::default();
        }
        let (s, ds) = self.smooth(rho);
        if self.power == 0.0 {
            ds
        } else {
            rho.powf(self.power) * (ds + s * (self.power / rho))
        }
    }

    /// `rho d f^ / d rho`, finite at zero.
    pub fn euler_derivative(&self, rho: f64) -> Complex64 {
        if rho > self.rho_max() || rho < 0.0 {
            return Complex64::default();
        }
        let (s, ds) = self.smooth(rho);
        rho.powf(self.power) * (ds * rho + s * self.power)
    }

    /// Breakpoints `0 = b_0 < ... < rho_max` in `pieces` chunks of nodes.
    pub fn breaks(&self, pieces: usize) -> Vec<f64> {
        let n = self.rho_nodes.len();
        let step = (n / pieces.max(1)).max(1);
        let mut b = vec![0.0];
        b.extend(self.rho_nodes.iter().step_by(step).copied());
        if *b.last().unwrap() < self.rho_max() {
            b.push(self.rho_max());
        }
        b
    }

    /// `int_0^rho_max w(rho) |g(rho)|^2 rho d rho` for a pointwise expression `g`.
    pub fn weighted_integral(&self, g: impl Fn(f64) -> f64) -> Result<f64> {
        let opts = QuadOptions { abs_tol: 1e-300, rel_tol: 1e-11, max_panels: 20_000 };
        let r = integrate(|rho| Complex64::new(g(rho), 0.0), &self.breaks(self.rho_nodes.len()), opts)?;
        Ok(r.value.re)
    }
}

/// Uniform nodes `rho_max k / count`, `k = 1..=count`.
pub fn uniform_nodes(rho_max: f64, count: usize) -> Vec<f64> {
    (1..=count).map(|k| rho_max * k as f64 / count as f64).collect()
}

/// The function whose circular harmonics are taken, given through its
/// Fourier transform `f^(xi) = int f(x) exp(-i x.xi) dx`.
#[derive(Clone)]
pub enum FourierInput {
    /// `f^(xi) = |xi|^power * smooth(xi)`.
    Analytic { smooth: Arc<dyn Fn([f64; 2]) -> Complex64 + Send + Sync>, power: f64 },
    /// A localized field on the periodic box, transformed off-grid by the
    /// trapezoidal sum `dx^2 sum_x f(x) exp(-i x.xi)`.
    Grid(SpectralField),
}

impl std::fmt::Debug for FourierInput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Analytic { power, .. } => write!(f, "Analytic {{ power: {power} }}"),
            Self::Grid(g) => write!(f, "Grid({:?})", g.grid()),
        }
    }
}

impl FourierInput {
    pub fn analytic(f: impl Fn([f64; 2]) -> Complex64 + Send + Sync + 'static) -> Self {
        Self::Analytic { smooth: Arc::new(f), power: 0.0 }
    }

    pub fn analytic_with_power(power: f64, f: impl Fn([f64; 2]) -> Complex64 + Send + Sync + 'static) -> Self {
        Self::Analytic { smooth: Arc::new(f), power }
    }

    fn power(&self) -> f64 {
        match self {
            Self::Analytic { power, .. } => *power,
            Self::Grid(_) => 0.0,
        }
    }
}

/// Transform of the radial Gaussian `amp exp(-|x|^2 / (2 w^2))`.
pub fn gaussian_transform(width: f64, amp: f64) -> impl Fn([f64; 2]) -> Complex64 + Send + Sync + Clone {
    move |xi| {
        let r2 = xi[0] * xi[0] + xi[1] * xi[1];
        Complex64::new(amp * 2.0 * PI * width * width * (-0.5 * width * width * r2).exp(), 0.0)
    }
}

/// Circular harmonics `f^(rho, theta) = sum_m f^_m(rho) exp(i m theta)`.
#[derive(Clone, Debug)]
pub struct HarmonicDecomposition {
    pub m_max: i32,
    pub profiles: BTreeMap<i32, RadialProfile>,
    /// Relative energy found at `m_max < |m| <= 2 m_max + 1`.
    pub angular_tail: f64,
    /// Box length of the source field, when the input was a grid field.
    pub source_box: Option<f64>,
}

impl HarmonicDecomposition {
    pub fn radial(profile: RadialProfile) -> Self {
        let mut profiles = BTreeMap::new();
        profiles.insert(0, profile);
        Self { m_max: 0, profiles, angular_tail: 0.0, source_box: None }
    }

    pub fn rho_max(&self) -> f64 {
        self.profiles.values().map(|p| p.rho_max()).fold(0.0, f64::max)
    }

    /// Reconstruction of `f^` at polar point `(rho, theta)`.
    pub fn eval(&self, rho: f64, theta: f64) -> Complex64 {
        self.profiles.iter().map(|(&m, p)| p.eval(rho) * Complex64::from_polar(1.0, m as f64 * theta)).sum()
    }

    /// `sum_m ||f^_m||^2` with `||g||^2 = 2 pi int |g|^2 rho d rho`.
    pub fn energy(&self) -> Result<f64> {
        let mut e = 0.0;
        for p in self.profiles.values() {
            e += 2.0 * PI * p.weighted_integral(|r| p.eval(r).norm_sqr() * r)?;
        }
        Ok(e)
    }

    /// Largest `rho` at which some harmonic still exceeds `rel` of its peak.
    pub fn effective_rho_max(&self, rel: f64) -> f64 {
        let mut out: f64 = 0.0;
        for p in self.profiles.values() {
            let peak = p.rho_nodes().iter().map(|&r| p.eval(r).norm() * r).fold(0.0, f64::max);
            if let Some(&r) = p.rho_nodes().iter().rev().find(|&&r| p.eval(r).norm() * r > rel * peak) {
                out = out.max(r);
            }
        }
        out
    }
}

/// Number of angular samples used for a given `m_max`.
pub fn angular_samples(m_max: i32) -> usize {
    (4 * (m_max as usize + 1)).next_power_of_two().max(32)
}

fn grid_transform(f: &SpectralField, xi: [f64; 2], values: &[Complex64]) -> Complex64 {
    let g = f.grid();
    let n = g.n();
    let dx = g.dx();
    let e1: Vec<Complex64> = (0..n).map(|a| Complex64::from_polar(1.0, -xi[0] * g.coord(a))).collect();
    let e2: Vec<Complex64> = (0..n).map(|b| Complex64::from_polar(1.0, -xi[1] * g.coord(b))).collect();
    let mut acc = Complex64::default();
    for a in 0..n {
        let row = &values[a * n..(a + 1) * n];
        let inner: Complex64 = row.iter().zip(&e2).map(|(v, e)| v * e).sum();
        acc += inner * e1[a];
    }
    acc * dx * dx
}

/// Angular FFT of `f^` on each circle `|xi| = rho`.
///
/// Fails when the relative energy above `m_max` exceeds [`ANGULAR_TAIL_TOL`].
pub fn circular_harmonics(input: &FourierInput, m_max: i32, rho_grid: &[f64]) -> Result<HarmonicDecomposition> {
    if m_max < 0 {
        return Err(Error::Config(format!("m_max must be >= 0, got {m_max}")));
    }
    let samples = angular_samples(m_max);
    let mut fft = FftPlanner::new();
    let plan = fft.plan_fft_forward(samples);
    let grid_values = match input {
        FourierInput::Grid(f) => Some(f.to_complex_values()),
        _ => None,
    };
    let mut cols: BTreeMap<i32, Vec<Complex64>> = (-m_max..=m_max).map(|m| (m, Vec::with_capacity(rho_grid.len()))).collect();
    let (mut kept, mut tail) = (0.0, 0.0);
    let mut buf = vec![Complex64::default(); samples];
    for &rho in rho_grid {
        for (k, b) in buf.iter_mut().enumerate() {
            let th = 2.0 * PI * k as f64 / samples as f64;
            let xi = [rho * th.cos(), rho * th.sin()];
            *b = match (input, &grid_values) {
                (FourierInput::Analytic { smooth, .. }, _) => smooth(xi),
                (FourierInput::Grid(f), Some(v)) => grid_transform(f, xi, v),
                _ => unreachable!(),
            };
        }
        plan.process(&mut buf);
        for (k, c) in buf.iter().enumerate() {
            let m = if k <= samples / 2 { k as i64 } else { k as i64 - samples as i64 };
            let c = c / samples as f64;
            let w = c.norm_sqr() * rho;
            if m.unsigned_abs() as i32 <= m_max {
                kept += w;
                cols.get_mut(&(m as i32)).unwrap().push(c);
            } else {
                tail += w;
            }
        }
    }
    let total = kept + tail;
    let angular_tail = if total > 0.0 { tail / total } else { 0.0 };
    if angular_tail > ANGULAR_TAIL_TOL {
        return Err(Error::Config(format!(
            "angular content under-resolved: {angular_tail:.3e} of the energy lies above m_max = {m_max}"
        )));
    }
    let power = input.power();
    let mut profiles = BTreeMap::new();
    for (m, v) in cols {
        profiles.insert(m, RadialProfile::with_power(rho_grid.to_vec(), v, power)?);
    }
    let source_box = match input {
        FourierInput::Grid(f) => Some(f.grid().box_length()),
        _ => None,
    };
    Ok(HarmonicDecomposition { m_max, profiles, angular_tail, source_box })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{gaussian, GridSpec};

    #[test]
    fn cubic_interpolation_order() {
        let f = |r: f64| Complex64::new((-r * r).exp(), r.sin());
        let mut errs = Vec::new();
        for count in [400, 800] {
            let p = RadialProfile::from_fn(uniform_nodes(4.0, count), 0.0, f).unwrap();
            let e = (0..997).map(|i| 0.004 * i as f64 + 0.001).map(|r| (p.eval(r) - f(r)).norm()).fold(0.0, f64::max);
            errs.push(e);
        }
        assert!(errs[1] < 1e-8 && errs[0] / errs[1] > 12.0, "{errs:?}");
        let p = RadialProfile::from_fn(uniform_nodes(4.0, 800), -0.5, f).unwrap();
        let r: f64 = 0.37;
        assert!((p.eval(r) - f(r) * r.powf(-0.5)).norm() < 1e-10);
        let fd = (p.eval(r + 1e-5) - p.eval(r - 1e-5)) / 2e-5;
        assert!((p.derivative(r) - fd).norm() < 1e-6);
        assert!((p.euler_derivative(r) - fd * r).norm() < 1e-6);
        assert!(RadialProfile::new(vec![0.0, 1.0, 2.0, 3.0], vec![Complex64::default(); 4]).is_err());
    }

    #[test]
    fn radial_and_shifted_content() {
        let nodes = uniform_nodes(8.0, 400);
        let g = gaussian_transform(1.0, 1.0);
        let d = circular_harmonics(&FourierInput::analytic(g.clone()), 4, &nodes).unwrap();
        for (&m, p) in &d.profiles {
            let peak = p.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
            if m != 0 {
                assert!(peak <= 1e-12, "m {m}: {peak}");
            }
        }
        let shifted = move |xi: [f64; 2]| g(xi) * Complex64::new(xi[0], xi[1]) / xi[0].hypot(xi[1]).max(1e-300);
        let d = circular_harmonics(&FourierInput::analytic(shifted), 4, &nodes).unwrap();
        let e1 = d.profiles[&1].values().iter().map(|v| v.norm()).fold(0.0, f64::max);
        let e0 = d.profiles[&0].values().iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(e1 > 1.0 && e0 < 1e-12);
    }

    #[test]
    fn reconstruction_and_parseval() {
        // band 3 in angle
        let f = |xi: [f64; 2]| {
            let r2 = xi[0] * xi[0] + xi[1] * xi[1];
            let z = Complex64::new(xi[0], xi[1]);
            (1.0 + z * z * 0.3 + z.conj().powi(3) * 0.1) * (-r2).exp()
        };
        let nodes = uniform_nodes(7.0, 1400);
        let d = circular_harmonics(&FourierInput::analytic(f), 3, &nodes).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..50 {
            let rho = 0.013 + 0.11 * i as f64;
            let th = 0.7 * i as f64;
            let want = f([rho * th.cos(), rho * th.sin()]);
            worst = worst.max((d.eval(rho, th) - want).norm() / want.norm().max(1e-3));
        }
        assert!(worst <= 1e-8, "{worst}");
        // Parseval: int |f^|^2 over the plane by a polar tensor rule
        let direct = {
            let nt = 64;
            let opts = QuadOptions { abs_tol: 1e-300, rel_tol: 1e-12, max_panels: 10_000 };
            integrate(
                |rho| {
                    let s: f64 = (0..nt)
                        .map(|k| {
                            let th = 2.0 * PI * k as f64 / nt as f64;
                            f([rho * th.cos(), rho * th.sin()]).norm_sqr()
                        })
                        .sum();
                    Complex64::new(s * 2.0 * PI / nt as f64 * rho, 0.0)
                },
                &[0.0, 7.0],
                opts,
            )
            .unwrap()
            .value
            .re
        };
        assert!((d.energy().unwrap() - direct).abs() <= 1e-8 * direct);
        assert!(circular_harmonics(&FourierInput::analytic(f), 1, &nodes).is_err());
    }

    #[test]
    fn grid_input_matches_analytic() {
        let grid = GridSpec::new(64, 30.0).unwrap();
        let field = gaussian(grid, [0.0, 0.0], 1.2, 1.0);
        let nodes = uniform_nodes(4.0, 40);
        let dg = circular_harmonics(&FourierInput::Grid(field), 2, &nodes).unwrap();
        let da = circular_harmonics(&FourierInput::analytic(gaussian_transform(1.2, 1.0)), 2, &nodes).unwrap();
        for &r in &nodes {
            assert!((dg.profiles[&0].eval(r) - da.profiles[&0].eval(r)).norm() < 1e-9);
        }
        assert_eq!(dg.source_box, Some(30.0));
    }
}
