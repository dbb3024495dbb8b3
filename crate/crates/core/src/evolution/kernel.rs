//! Fused nonlinear term of the complex form, evaluated with packed real FFTs.

use std::cell::RefCell;

use num_complex::Complex64;

use crate::dno::SLOPE_GUARD;
use crate::spectral::fft::{transpose_layout, PrunedFft};
use crate::spectral::GridSpec;
use crate::{Error, Result};

type C = Complex64;

/// Precomputed symbols for one grid, surface tension and series order.
///
/// All spectral arrays use the transposed layout of [`PrunedFft`] and are
/// assumed dealiased.
#[derive(Clone, Debug)]
pub(crate) struct Kernel {
    pub grid: GridSpec,
    pub gamma: f64,
    pub c: f64,
    pub order: usize,
    kx: Vec<f64>,
    ky: Vec<f64>,
    /// `lam[p][i] = |k_i|^p` for `p = 0..=order + 1`.
    lam: Vec<Vec<f64>>,
    sqrt_k: Vec<f64>,
    pub omega: Vec<f64>,
    keep: Vec<bool>,
    mirror: Vec<usize>,
    /// Rows `b` of the transposed layout that survive the mask.
    rows: Vec<usize>,
    fft: RefCell<PrunedFft>,
    pool: RefCell<Pool>,
}

/// Recycled work arrays; every evaluation reuses the same buffers.
#[derive(Clone, Debug, Default)]
struct Pool {
    r: Vec<Vec<f64>>,
    c: Vec<Vec<C>>,
}

impl Kernel {
    pub fn new(grid: GridSpec, c: f64, order: usize) -> Self {
        let n = grid.n();
        let len = grid.len();
        let mut kx = vec![0.0; len];
        let mut ky = vec![0.0; len];
        let mut keep = vec![false; len];
        let mut mirror = vec![0; len];
        let mut kabs = vec![0.0; len];
        for a in 0..n {
            for b in 0..n {
                let i = b * n + a;
                let k = grid.wavevector(a, b);
                if !grid.is_nyquist(a, b) {
                    kx[i] = k[0];
                    ky[i] = k[1];
                }
                kabs[i] = k[0].hypot(k[1]);
                keep[i] = grid.keeps(a, b);
                let (ma, mb) = grid.mirror(a, b);
                mirror[i] = mb * n + ma;
            }
        }
        let lam = (0..=order + 1).map(|p| kabs.iter().map(|r| r.powi(p as i32)).collect()).collect();
        let gamma = (0.5 * c).sqrt();
        let sqrt_k: Vec<f64> = kabs.iter().map(|r| r.sqrt()).collect();
        let omega = kabs.iter().map(|r| gamma * r * r.sqrt()).collect();
        let fft = RefCell::new(PrunedFft::new(&grid));
        let rows = (0..n).filter(|&b| grid.keeps(0, b)).collect();
        Self { grid, gamma, c, order, kx, ky, lam, sqrt_k, omega, keep, mirror, rows, fft, pool: RefCell::default() }
    }

    /// Natural layout to the kernel layout, dropping modes outside the mask.
    pub fn import(&self, natural: &[C]) -> Vec<C> {
        let mut t = transpose_layout(self.grid.n(), natural);
        self.dealias(&mut t);
        t
    }

    pub fn export(&self, t: &[C]) -> Vec<C> {
        transpose_layout(self.grid.n(), t)
    }

    fn rvec(&self) -> Vec<f64> {
        self.pool.borrow_mut().r.pop().unwrap_or_else(|| vec![0.0; self.grid.len()])
    }

    fn cvec(&self) -> Vec<C> {
        self.pool.borrow_mut().c.pop().unwrap_or_else(|| vec![C::default(); self.grid.len()])
    }

    fn free_r(&self, v: Vec<f64>) {
        self.pool.borrow_mut().r.push(v);
    }

    fn free_c(&self, v: Vec<C>) {
        self.pool.borrow_mut().c.push(v);
    }

    /// `(i k_axis)^d |k|^p src`, with `d` in `{0, 1}`. Only the rows kept by
    /// the mask are written; the others are left unspecified, which the
    /// pruned inverse transform never reads.
    fn symbol(&self, src: &[C], p: usize, axis: Option<usize>) -> Vec<C> {
        let mut out = self.cvec();
        let w = &self.lam[p];
        let n = self.grid.n();
        for &r in &self.rows {
            let range = r * n..(r + 1) * n;
            let (o, s, w) = (&mut out[range.clone()], &src[range.clone()], &w[range.clone()]);
            match axis {
                None => {
                    for i in 0..n {
                        o[i] = s[i] * w[i];
                    }
                }
                Some(ax) => {
                    let k = if ax == 0 { &self.kx[range] } else { &self.ky[range] };
                    for i in 0..n {
                        let f = k[i] * w[i];
                        o[i] = C::new(-s[i].im * f, s[i].re * f);
                    }
                }
            }
        }
        out
    }

    fn dealias(&self, v: &mut [C]) {
        for (z, &k) in v.iter_mut().zip(&self.keep) {
            if !k {
                *z = C::default();
            }
        }
    }

    /// Samples of real fields from their spectra; the spectra are recycled.
    fn inverse_many(&self, specs: Vec<Vec<C>>) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(specs.len());
        let mut it = specs.into_iter();
        while let Some(a) = it.next() {
            let mut x = self.rvec();
            let mut y = self.rvec();
            match it.next() {
                Some(b) => {
                    self.fft.borrow_mut().inverse_pair(&a, &b, &mut x, &mut y);
                    out.push(x);
                    out.push(y);
                    self.free_c(b);
                }
                None => {
                    let mut zeros = self.cvec();
                    zeros.iter_mut().for_each(|z| *z = C::default());
                    self.fft.borrow_mut().inverse_pair(&a, &zeros, &mut x, &mut y);
                    out.push(x);
                    self.free_r(y);
                    self.free_c(zeros);
                }
            }
            self.free_c(a);
        }
        out
    }

    /// Dealiased spectra of real samples.
    fn forward_many(&self, values: &[&[f64]]) -> Vec<Vec<C>> {
        let mut out = Vec::with_capacity(values.len());
        for pair in values.chunks(2) {
            let mut a = self.cvec();
            let mut b = self.cvec();
            if pair.len() == 2 {
                self.fft.borrow_mut().forward_pair(pair[0], pair[1], &mut a, &mut b);
                out.push(a);
                out.push(b);
            } else {
                let mut zeros = self.rvec();
                zeros.iter_mut().for_each(|z| *z = 0.0);
                self.fft.borrow_mut().forward_pair(pair[0], &zeros, &mut a, &mut b);
                out.push(a);
                self.free_c(b);
                self.free_r(zeros);
            }
        }
        out
    }

    /// `(h_hat, psi_hat)` from `u = gamma Lambda^1/2 h + i psi`.
    pub fn split(&self, u: &[C]) -> (Vec<C>, Vec<C>) {
        let mut h = self.cvec();
        let mut p = self.cvec();
        for i in 0..u.len() {
            let v = u[i];
            let w = u[self.mirror[i]].conj();
            let s = self.gamma * self.sqrt_k[i];
            h[i] = if s > 0.0 { (v + w) * (0.5 / s) } else { C::default() };
            p[i] = (v - w) * C::new(0.0, -0.5);
        }
        (h, p)
    }

    pub fn join(&self, h: &[C], psi: &[C]) -> Vec<C> {
        (0..h.len()).map(|i| h[i] * (self.gamma * self.sqrt_k[i]) + C::new(0.0, 1.0) * psi[i]).collect()
    }

    /// `(G(h) psi - Lambda psi, d_t psi + (c/2) Lambda^2 h)` in Fourier space,
    /// both dealiased; the slope of `h` is checked against the guard.
    ///
    /// With `A = sum a_m` the series reads `a_m = -sum_j h^j/j! Lambda^j a_{m-j}`
    /// and `G_m = Lambda a_m + P_m` where
    /// `P_m = sum_j h^j/j! Lambda^{j+1} a_{m-j} - grad h . sum_j h^j/j! grad Lambda^j a_{m-1-j}`.
    /// Physical values of `Lambda^p a_k` and `grad Lambda^p a_k` are formed
    /// once per `a_k`.
    fn nonlinear_parts(&self, h: &[C], psi: &[C]) -> Result<(Vec<C>, Vec<C>)> {
        let order = self.order;
        let len = h.len();
        let mut first = vec![self.symbol(h, 0, None), self.symbol(h, 0, Some(0)), self.symbol(h, 0, Some(1))];
        first.push(self.symbol(psi, 0, Some(0)));
        first.push(self.symbol(psi, 0, Some(1)));
        let specs_of = |src: &[C], k: usize| -> Vec<Vec<C>> {
            // Lambda^p a_k for p = 1..=order-k+1, grad Lambda^p a_k for p = 0..order-k
            let mut v: Vec<Vec<C>> = (1..=order - k + 1).map(|p| self.symbol(src, p, None)).collect();
            for p in 0..order - k {
                v.push(self.symbol(src, p, Some(0)));
                v.push(self.symbol(src, p, Some(1)));
            }
            v
        };
        let (mut qy_hat, mut first_rest) = (None, specs_of(psi, 0));
        // psi's own gradient is already in `first`
        if order > 0 {
            let gx = first_rest.remove(order + 1);
            let gy = first_rest.remove(order + 1);
            self.free_c(gx);
            self.free_c(gy);
        }
        first.append(&mut first_rest);
        let mut phys = self.inverse_many(first).into_iter();
        let hv = phys.next().expect("count");
        let hx = phys.next().expect("count");
        let hy = phys.next().expect("count");
        let px = phys.next().expect("count");
        let py = phys.next().expect("count");

        let mut slope2: f64 = 0.0;
        for i in 0..len {
            slope2 = slope2.max(hx[i] * hx[i] + hy[i] * hy[i]);
        }
        let slope = slope2.sqrt();
        if !(slope < SLOPE_GUARD) {
            for v in [hv, hx, hy, px, py].into_iter().chain(phys) {
                self.free_r(v);
            }
            return Err(Error::SlopeGuard(slope, SLOPE_GUARD));
        }

        // curvature flux minus its linear part: grad h (1/(2 sqrt(1+s)) - 1/2)
        let mut qx = self.rvec();
        let mut qy = self.rvec();
        for i in 0..len {
            let s = hx[i] * hx[i] + hy[i] * hy[i];
            let root = (1.0 + s).sqrt();
            let w = -0.5 * s / (root * (1.0 + root));
            qx[i] = hx[i] * w;
            qy[i] = hy[i] * w;
        }

        // hp[j] = h^j / j!
        let mut hp: Vec<Vec<f64>> = Vec::with_capacity(order + 1);
        for j in 1..=order {
            let mut next = self.rvec();
            for i in 0..len {
                next[i] = if j == 1 { hv[i] } else { hp[j - 2][i] * hv[i] / j as f64 };
            }
            hp.push(next);
        }

        // lams[k][p - 1] = Lambda^p a_k, grads[k][p] = grad Lambda^p a_k
        let mut lams: Vec<Vec<Vec<f64>>> = vec![(0..=order).map(|_| phys.next().expect("count")).collect()];
        let mut g0 = vec![[px, py]];
        for _ in 1..order {
            g0.push([phys.next().expect("count"), phys.next().expect("count")]);
        }
        let mut grads: Vec<Vec<[Vec<f64>; 2]>> = vec![g0];

        let mut rest = self.cvec();
        rest.iter_mut().for_each(|z| *z = C::default());
        let mut p_phys = self.rvec();
        p_phys.iter_mut().for_each(|z| *z = 0.0);
        for m in 1..=order {
            let mut a = self.rvec();
            a.iter_mut().for_each(|z| *z = 0.0);
            for j in 1..=m {
                let w = if j == 1 { &hv } else { &hp[j - 1] };
                let (l, l1) = (&lams[m - j][j - 1], &lams[m - j][j]);
                for i in 0..len {
                    a[i] -= w[i] * l[i];
                    p_phys[i] += w[i] * l1[i];
                }
            }
            for j in 0..m {
                let [g1, g2] = &grads[m - 1 - j][j];
                if j == 0 {
                    for i in 0..len {
                        p_phys[i] -= hx[i] * g1[i] + hy[i] * g2[i];
                    }
                } else {
                    let w = &hp[j - 1];
                    for i in 0..len {
                        p_phys[i] -= w[i] * (hx[i] * g1[i] + hy[i] * g2[i]);
                    }
                }
            }
            let a_hat = if m < order {
                let mut both = self.forward_many(&[&a, &qy]).into_iter();
                let a_hat = both.next().expect("two fields");
                if m == 1 {
                    qy_hat = both.next();
                } else {
                    self.free_c(both.next().expect("two fields"));
                }
                let mut ph = self.inverse_many(specs_of(&a_hat, m)).into_iter();
                lams.push((0..=order - m).map(|_| ph.next().expect("count")).collect());
                grads.push((0..order - m).map(|_| [ph.next().expect("count"), ph.next().expect("count")]).collect());
                a_hat
            } else {
                let mut both = self.forward_many(&[&a, &p_phys]).into_iter();
                let a_hat = both.next().expect("two fields");
                let p_hat = both.next().expect("two fields");
                for i in 0..len {
                    rest[i] += p_hat[i];
                }
                self.free_c(p_hat);
                a_hat
            };
            for i in 0..len {
                rest[i] += a_hat[i] * self.lam[1][i];
            }
            self.free_c(a_hat);
            self.free_r(a);
        }

        let mut g_hat = self.symbol(psi, 1, None);
        for i in 0..len {
            g_hat[i] += rest[i];
        }
        let gv = self.inverse_many(vec![g_hat]).pop().expect("one field");
        let mut b = self.rvec();
        let (px, py) = {
            let [px, py] = &grads[0][0];
            (px, py)
        };
        for i in 0..len {
            let s = hx[i] * hx[i] + hy[i] * hy[i];
            let t = gv[i] + hx[i] * px[i] + hy[i] * py[i];
            b[i] = -0.5 * (px[i] * px[i] + py[i] * py[i]) + t * t / (2.0 * (1.0 + s));
        }
        let (b_hat, qx_hat, qy_hat) = match qy_hat {
            Some(qy_hat) => {
                let mut f = self.forward_many(&[&b, &qx]).into_iter();
                (f.next().expect("two"), f.next().expect("two"), qy_hat)
            }
            None => {
                let mut f = self.forward_many(&[&b, &qx, &qy]).into_iter();
                (f.next().expect("three"), f.next().expect("three"), f.next().expect("three"))
            }
        };
        let mut psi_part = b_hat;
        for i in 0..len {
            let d = C::new(-qx_hat[i].im * self.kx[i] - qy_hat[i].im * self.ky[i], qx_hat[i].re * self.kx[i] + qy_hat[i].re * self.ky[i]);
            psi_part[i] += d * self.c;
        }
        self.free_c(qx_hat);
        self.free_c(qy_hat);
        for v in [hv, hx, hy, qx, qy, gv, b, p_phys].into_iter().chain(hp) {
            self.free_r(v);
        }
        for v in lams.into_iter().flatten() {
            self.free_r(v);
        }
        for v in grads.into_iter().flatten().flatten() {
            self.free_r(v);
        }
        Ok((rest, psi_part))
    }

    /// Nonlinear part `N(u)` of `d_t u = -i omega u + N(u)`, written to `out`.
    pub fn nonlinear(&self, u: &[C], out: &mut [C]) -> Result<()> {
        let (h, psi) = self.split(u);
        let parts = self.nonlinear_parts(&h, &psi);
        self.free_c(h);
        self.free_c(psi);
        let (hp, pp) = parts?;
        for i in 0..u.len() {
            out[i] = hp[i] * (self.gamma * self.sqrt_k[i]) + C::new(0.0, 1.0) * pp[i];
        }
        self.free_c(hp);
        self.free_c(pp);
        Ok(())
    }

    /// `exp(-i omega s)` coefficient-wise.
    pub fn phases(&self, s: f64) -> Vec<C> {
        self.omega.iter().map(|w| C::from_polar(1.0, -w * s)).collect()
    }
}
