//! Finite-depth elliptic evaluation of `G(h)` on a flattened slab.
//!
//! The fluid region `{-D < z < h(x)}` is mapped to `s in [-1, 0]` through
//! `Z(x, s) = zeta(s) + h(x) (1 + zeta(s) / D)`, where `zeta` stretches the
//! depth grid toward the surface. In these coordinates Laplace's equation
//! reads
//!
//! ```text
//! d_i (J d_i P - Z_i d_s P) + d_s (-Z_i d_i P + B d_s P) = 0,
//! J = Z_s,   B = (1 + |grad Z|^2) / J,
//! ```
//!
//! with `P = f` at `s = 0` and `d_s P = 0` at `s = -1`. The horizontal
//! directions are spectral; depth uses a second-order finite-volume stencil.
//! The system is solved by GMRES preconditioned with the flat-surface
//! operator, which is tridiagonal for each Fourier mode.

use num_complex::Complex64;

use super::series::check_preconditions;
use super::DnoConfig;
use crate::spectral::{fft, GridSpec, SpectralField};
use crate::{Error, Result};

/// Solution of one oracle solve.
#[derive(Clone, Debug)]
pub struct OracleReport {
    pub field: SpectralField,
    pub iterations: usize,
    pub residual: f64,
}

/// Horizontal spectral operations on real sample arrays.
struct Horizontal {
    grid: GridSpec,
    kx: Vec<f64>,
    ky: Vec<f64>,
}

impl Horizontal {
    fn new(grid: GridSpec) -> Self {
        let n = grid.n();
        let mut kx = vec![0.0; grid.len()];
        let mut ky = vec![0.0; grid.len()];
        for a in 0..n {
            for b in 0..n {
                if !grid.is_nyquist(a, b) {
                    let k = grid.wavevector(a, b);
                    kx[a * n + b] = k[0];
                    ky[a * n + b] = k[1];
                }
            }
        }
        Self { grid, kx, ky }
    }

    fn forward(&self, v: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        fft::forward(&self.grid, &mut buf);
        buf
    }

    /// `(d1 v, d2 v)` from one forward and one inverse transform.
    fn grad(&self, v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut c = self.forward(v);
        for (i, z) in c.iter_mut().enumerate() {
            // i k1 c + i (i k2 c)
            *z = Complex64::new(0.0, self.kx[i]) * *z - self.ky[i] * *z;
        }
        fft::inverse(&self.grid, &mut c);
        (c.iter().map(|z| z.re).collect(), c.iter().map(|z| z.im).collect())
    }

    /// `d1 q1 + d2 q2` for real `q1, q2`, packed into one transform.
    fn div(&self, q1: &[f64], q2: &[f64]) -> Vec<f64> {
        let mut c: Vec<Complex64> = q1.iter().zip(q2).map(|(&a, &b)| Complex64::new(a, b)).collect();
        fft::forward(&self.grid, &mut c);
        let n = self.grid.n();
        let mut out = vec![Complex64::default(); c.len()];
        for a in 0..n {
            for b in 0..n {
                let i = a * n + b;
                let (ma, mb) = self.grid.mirror(a, b);
                let cm = c[ma * n + mb].conj();
                let s1 = 0.5 * (c[i] + cm);
                let s2 = Complex64::new(0.0, -0.5) * (c[i] - cm);
                out[i] = Complex64::new(0.0, self.kx[i]) * s1 + Complex64::new(0.0, self.ky[i]) * s2;
            }
        }
        fft::inverse(&self.grid, &mut out);
        out.iter().map(|z| z.re).collect()
    }
}

/// Depth grid and the coefficient fields of the mapped operator.
struct Slab {
    hz: Horizontal,
    layers: usize,
    ds: f64,
    /// `J` and `Z_i` at the nodes `l = 0..=layers`.
    jac: Vec<Vec<f64>>,
    zx: Vec<Vec<f64>>,
    zy: Vec<Vec<f64>>,
    /// `B` at the half nodes `l + 1/2`, `l = 0..layers`.
    b_half: Vec<Vec<f64>>,
    /// Flat-surface `zeta'` at nodes and `1 / zeta'` at half nodes.
    flat_j: Vec<f64>,
    flat_b: Vec<f64>,
}

fn stretch(depth: f64, a: f64) -> (impl Fn(f64) -> f64, impl Fn(f64) -> f64) {
    let lin = a.abs() < 1e-12;
    let den = a.exp_m1();
    let zeta = move |s: f64| if lin { depth * s } else { -depth * (-a * s).exp_m1() / den };
    let dzeta = move |s: f64| if lin { depth } else { depth * a * (-a * s).exp() / den };
    (zeta, dzeta)
}

impl Slab {
    fn new(h: &SpectralField, cfg: &DnoConfig) -> Self {
        let grid = *h.grid();
        let hz = Horizontal::new(grid);
        let layers = cfg.oracle_layers;
        let ds = 1.0 / layers as f64;
        let depth = cfg.oracle_depth;
        let (zeta, dzeta) = stretch(depth, cfg.oracle_stretch);
        let hv = h.to_real_values();
        let (hx, hy) = hz.grad(&hv);
        let at = |s: f64| {
            let (z, dz) = (zeta(s), dzeta(s));
            let lift = 1.0 + z / depth;
            let j: Vec<f64> = hv.iter().map(|&x| dz * (1.0 + x / depth)).collect();
            let zx: Vec<f64> = hx.iter().map(|&g| g * lift).collect();
            let zy: Vec<f64> = hy.iter().map(|&g| g * lift).collect();
            (j, zx, zy)
        };
        let mut jac = Vec::new();
        let mut zx = Vec::new();
        let mut zy = Vec::new();
        for l in 0..=layers {
            let (j, x, y) = at(-(l as f64) * ds);
            jac.push(j);
            zx.push(x);
            zy.push(y);
        }
        let mut b_half = Vec::new();
        let mut flat_b = Vec::new();
        for l in 0..layers {
            let s = -(l as f64 + 0.5) * ds;
            let (j, x, y) = at(s);
            b_half.push(
                j.iter().zip(x.iter().zip(&y)).map(|(j, (x, y))| (1.0 + x * x + y * y) / j).collect(),
            );
            flat_b.push(1.0 / dzeta(s));
        }
        let flat_j = (0..=layers).map(|l| dzeta(-(l as f64) * ds)).collect();
        Self { hz, layers, ds, jac, zx, zy, b_half, flat_j, flat_b }
    }

    fn len(&self) -> usize {
        self.hz.grid.len()
    }

    /// Residual of the discrete equations at nodes `1..=layers` for the node
    /// values `phi[0..=layers]`.
    fn residual(&self, phi: &[&[f64]]) -> Vec<Vec<f64>> {
        let (nl, ds, len) = (self.layers, self.ds, self.len());
        let grads: Vec<(Vec<f64>, Vec<f64>)> = phi.iter().map(|p| self.hz.grad(p)).collect();
        // F1 = -Z_i d_i P at nodes
        let f1: Vec<Vec<f64>> = (0..=nl)
            .map(|l| {
                (0..len).map(|i| -(self.zx[l][i] * grads[l].0[i] + self.zy[l][i] * grads[l].1[i])).collect()
            })
            .collect();
        // F at half nodes
        let flux: Vec<Vec<f64>> = (0..nl)
            .map(|l| {
                (0..len)
                    .map(|i| {
                        self.b_half[l][i] * (phi[l][i] - phi[l + 1][i]) / ds + 0.5 * (f1[l][i] + f1[l + 1][i])
                    })
                    .collect()
            })
            .collect();
        let mut out = Vec::with_capacity(nl);
        for l in 1..=nl {
            let bottom = l == nl;
            let w = if bottom { 0.5 } else { 1.0 };
            let mut q1 = vec![0.0; len];
            let mut q2 = vec![0.0; len];
            for i in 0..len {
                let ps = if bottom { 0.0 } else { (phi[l - 1][i] - phi[l + 1][i]) / (2.0 * ds) };
                q1[i] = self.jac[l][i] * grads[l].0[i] - self.zx[l][i] * ps;
                q2[i] = self.jac[l][i] * grads[l].1[i] - self.zy[l][i] * ps;
            }
            let d = self.hz.div(&q1, &q2);
            let r: Vec<f64> = (0..len)
                .map(|i| {
                    let below = if bottom { 0.0 } else { flux[l][i] };
                    w * ds * d[i] + flux[l - 1][i] - below
                })
                .collect();
            out.push(r);
        }
        out
    }

    /// Solves the flat-surface system mode by mode (Thomas algorithm).
    fn precondition(&self, r: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let (nl, ds, len) = (self.layers, self.ds, self.len());
        let spec: Vec<Vec<Complex64>> = r.iter().map(|v| self.hz.forward(v)).collect();
        let mut out = vec![vec![Complex64::default(); len]; nl];
        let mut cp = vec![0.0; nl];
        let mut dp = vec![Complex64::default(); nl];
        for i in 0..len {
            let k2 = self.hz.kx[i].powi(2) + self.hz.ky[i].powi(2);
            // row l (unknown index l-1): lower * P_{l-1} + diag * P_l + upper * P_{l+1}
            for l in 1..=nl {
                let w = if l == nl { 0.5 } else { 1.0 };
                let bu = self.flat_b[l - 1] / ds;
                let bd = if l == nl { 0.0 } else { self.flat_b[l] / ds };
                let diag = -w * ds * self.flat_j[l] * k2 - bu - bd;
                let lower = if l > 1 { bu } else { 0.0 };
                let upper = bd;
                let rhs = spec[l - 1][i];
                let idx = l - 1;
                if idx == 0 {
                    cp[0] = upper / diag;
                    dp[0] = rhs / diag;
                } else {
                    let m = diag - lower * cp[idx - 1];
                    cp[idx] = upper / m;
                    dp[idx] = (rhs - dp[idx - 1] * lower) / m;
                }
            }
            out[nl - 1][i] = dp[nl - 1];
            for idx in (0..nl - 1).rev() {
                out[idx][i] = dp[idx] - out[idx + 1][i] * cp[idx];
            }
        }
        out.into_iter()
            .map(|mut c| {
                fft::inverse(&self.hz.grid, &mut c);
                c.into_iter().map(|z| z.re).collect()
            })
            .collect()
    }
}

fn flatten(v: &[Vec<f64>]) -> Vec<f64> {
    v.concat()
}

fn unflatten(v: &[f64], len: usize) -> Vec<Vec<f64>> {
    v.chunks(len).map(|c| c.to_vec()).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Restarted right-preconditioned GMRES for `A x = b`.
fn gmres(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    precond: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<(Vec<f64>, usize, f64)> {
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; b.len()];
    if bnorm == 0.0 {
        return Ok((x, 0, 0.0));
    }
    let mut total = 0;
    let mut rel = 1.0;
    while total < max_iter {
        let ax = apply(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let beta = dot(&r, &r).sqrt();
        rel = beta / bnorm;
        if rel <= tol {
            return Ok((x, total, rel));
        }
        let mut v = vec![r.iter().map(|z| z / beta).collect::<Vec<f64>>()];
        let mut z: Vec<Vec<f64>> = Vec::new();
        let mut hmat = vec![vec![0.0; restart]; restart + 1];
        let (mut cs, mut sn) = (vec![0.0; restart], vec![0.0; restart]);
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..restart {
            total += 1;
            let zk = precond(&v[k]);
            let mut w = apply(&zk);
            z.push(zk);
            for i in 0..=k {
                hmat[i][k] = dot(&w, &v[i]);
                for (wj, vj) in w.iter_mut().zip(&v[i]) {
                    *wj -= hmat[i][k] * vj;
                }
            }
            hmat[k + 1][k] = dot(&w, &w).sqrt();
            for i in 0..k {
                let t = cs[i] * hmat[i][k] + sn[i] * hmat[i + 1][k];
                hmat[i + 1][k] = -sn[i] * hmat[i][k] + cs[i] * hmat[i + 1][k];
                hmat[i][k] = t;
            }
            let den = hmat[k][k].hypot(hmat[k + 1][k]);
            cs[k] = hmat[k][k] / den;
            sn[k] = hmat[k + 1][k] / den;
            let wn = hmat[k + 1][k];
            hmat[k][k] = den;
            hmat[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            rel = g[k + 1].abs() / bnorm;
            if rel <= tol || total >= max_iter {
                break;
            }
            v.push(w.iter().map(|x| x / wn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| hmat[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / hmat[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, zi) in x.iter_mut().zip(&z[j]) {
                *xi += yj * zi;
            }
        }
    }
    // final true residual
    let ax = apply(&x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
    rel = rel.max(dot(&r, &r).sqrt() / bnorm);
    if rel <= tol * 10.0 {
        Ok((x, total, rel))
    } else {
        Err(Error::NoConvergence { iterations: total, residual: rel })
    }
}

fn solve_real(slab: &Slab, h: &[f64], f: &[f64], tol: f64) -> Result<(Vec<f64>, usize, f64)> {
    let len = slab.len();
    let zero = vec![0.0; len];
    let apply = |x: &[f64]| {
        let layers = unflatten(x, len);
        let mut refs: Vec<&[f64]> = vec![&zero];
        refs.extend(layers.iter().map(|v| v.as_slice()));
        flatten(&slab.residual(&refs))
    };
    // b = -residual(phi_0 = f, interior = 0)
    let mut refs: Vec<&[f64]> = vec![f];
    refs.extend(std::iter::repeat(zero.as_slice()).take(slab.layers));
    let b: Vec<f64> = flatten(&slab.residual(&refs)).into_iter().map(|x| -x).collect();
    let precond = |r: &[f64]| flatten(&slab.precondition(&unflatten(r, len)));
    let (x, its, res) = gmres(apply, precond, &b, tol, 40, 400)?;
    let layers = unflatten(&x, len);
    // surface normal derivative
    let ds = slab.ds;
    let (hx, hy) = slab.hz.grad(h);
    let (fx, fy) = slab.hz.grad(f);
    let g: Vec<f64> = (0..len)
        .map(|i| {
            let ps = (3.0 * f[i] - 4.0 * layers[0][i] + layers[1][i]) / (2.0 * ds);
            let s2 = hx[i] * hx[i] + hy[i] * hy[i];
            (1.0 + s2) * ps / slab.jac[0][i] - (hx[i] * fx[i] + hy[i] * fy[i])
        })
        .collect();
    Ok((g, its, res))
}

/// Raw oracle solve with iteration diagnostics.
pub fn solve_oracle(h: &SpectralField, f: &SpectralField, cfg: &DnoConfig) -> Result<OracleReport> {
    check_preconditions(h, f, 0)?;
    cfg.validate(h.grid().box_length())?;
    let slab = Slab::new(h, cfg);
    let hv = h.to_real_values();
    let grid = *h.grid();
    let re = f.real_part();
    let (g_re, mut its, mut res) = solve_real(&slab, &hv, &re.to_real_values(), cfg.oracle_tol)?;
    let mut out = SpectralField::from_real_values(grid, &g_re)?;
    if !f.is_real() {
        let im = f.imag_part();
        let (g_im, i2, r2) = solve_real(&slab, &hv, &im.to_real_values(), cfg.oracle_tol)?;
        let im_field = SpectralField::from_real_values(grid, &g_im)?;
        out = &out + &im_field.scale_complex(Complex64::new(0.0, 1.0));
        its += i2;
        res = res.max(r2);
    }
    Ok(OracleReport { field: out, iterations: its, residual: res })
}

/// `G(h) f` from the flattened-slab solve.
pub fn dno_oracle(h: &SpectralField, f: &SpectralField, cfg: &DnoConfig) -> Result<SpectralField> {
    solve_oracle(h, f, cfg).map(|r| r.field)
}

/// Oracle with the flat-surface discretisation error removed,
/// `O(h) f - O(0) f + |D| f`, extrapolated over `layers` and `2 layers`.
pub fn dno_oracle_refined(h: &SpectralField, f: &SpectralField, cfg: &DnoConfig) -> Result<SpectralField> {
    let flat = SpectralField::zeros(*h.grid());
    let lf = f.lambda_pow(1.0);
    let corrected = |c: &DnoConfig| -> Result<SpectralField> {
        let a = dno_oracle(h, f, c)?;
        let b = dno_oracle(&flat, f, c)?;
        Ok(&(&a - &b) + &lf)
    };
    let coarse = corrected(cfg)?;
    let fine_cfg = DnoConfig { oracle_layers: 2 * cfg.oracle_layers, ..*cfg };
    let fine = corrected(&fine_cfg)?;
    Ok(&fine.scale(4.0 / 3.0) - &coarse.scale(1.0 / 3.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::gaussian;

    #[test]
    fn flat_surface_symbol_converges_at_second_order() {
        let g = GridSpec::unit(16).unwrap();
        let h = SpectralField::zeros(g);
        let f = SpectralField::from_fn(g, |x, y| (2.0 * x).cos() + 0.5 * (x + y).sin());
        let exact = f.lambda_pow(1.0);
        let mut errs = Vec::new();
        for layers in [64, 128, 256] {
            let cfg = DnoConfig { oracle_layers: layers, ..DnoConfig::default() };
            let o = dno_oracle(&h, &f, &cfg).unwrap();
            errs.push((&o - &exact).l2_norm() / exact.l2_norm());
        }
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 4.0).abs() < 0.6, "{errs:?}");
        }
    }

    #[test]
    fn refined_oracle_matches_series_at_small_amplitude() {
        let g = GridSpec::unit(32).unwrap();
        let h = gaussian(g, [0.2, -0.1], 0.6, 0.01);
        let f = gaussian(g, [-0.3, 0.4], 0.8, 1.0);
        let cfg = DnoConfig { oracle_layers: 32, ..DnoConfig::default() };
        let o = dno_oracle_refined(&h, &f, &cfg).unwrap();
        let s = super::super::dno_series(&h, &f, 2).unwrap();
        let rel = (&o - &s).l2_norm() / s.l2_norm();
        assert!(rel < 1e-4, "{rel}");
    }
}
