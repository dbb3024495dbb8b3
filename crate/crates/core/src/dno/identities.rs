//! Symmetries, multilinear bounds and Leibniz rules of the series.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::series::{check_preconditions, sum_terms, terms_unchecked};
use crate::rng::seeded;
use crate::spectral::{check_margin, omega, sigma, GridSpec, SpectralField};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SymmetryTransform {
    /// `x -> x + (c1, c2) dx`.
    Translation(i64, i64),
    /// `x -> R^q x` with `R (x1, x2) = (-x2, x1)`.
    Rotation(u8),
    /// `h -> h(lambda .) / lambda`, `f -> f(lambda .)` for an integer `lambda`,
    /// realised by re-indexing modes onto a grid `lambda` times finer.
    Dilation(usize),
}

fn permute(f: &SpectralField, index: impl Fn(usize, usize) -> (usize, usize)) -> SpectralField {
    let g = *f.grid();
    let n = g.n();
    let v = f.to_complex_values();
    let mut out = vec![Complex64::default(); v.len()];
    for j1 in 0..n {
        for j2 in 0..n {
            let (i1, i2) = index(j1, j2);
            out[j1 * n + j2] = v[i1 * n + i2];
        }
    }
    if f.is_real() {
        let re: Vec<f64> = out.iter().map(|z| z.re).collect();
        SpectralField::from_real_values(g, &re).expect("grid length")
    } else {
        SpectralField::from_complex_values(g, &out).expect("grid length")
    }
}

/// `f o T` for a translation or rotation of the grid.
fn compose(f: &SpectralField, t: SymmetryTransform) -> SpectralField {
    let n = f.grid().n();
    let wrap = |j: usize, c: i64| ((j as i64 + c).rem_euclid(n as i64)) as usize;
    match t {
        SymmetryTransform::Translation(c1, c2) => permute(f, |j1, j2| (wrap(j1, c1), wrap(j2, c2))),
        SymmetryTransform::Rotation(q) => {
            let mut out = f.clone();
            for _ in 0..q % 4 {
                // (f o R)(x1, x2) = f(-x2, x1); -x_j sits at index n - j
                out = permute(&out, |j1, j2| ((n - j2) % n, j1));
            }
            out
        }
        SymmetryTransform::Dilation(_) => unreachable!("dilations change the grid"),
    }
}

/// Places the coefficient of mode `m` at mode `lambda m` on a finer grid.
fn upsample_modes(f: &SpectralField, lambda: usize, scale: f64) -> Result<SpectralField> {
    let g = *f.grid();
    let fine = GridSpec::with_dealias(lambda * g.n(), g.box_length(), g.dealias_fraction())?;
    let mut coeffs = vec![Complex64::default(); fine.len()];
    let n = g.n();
    let l = lambda as i64;
    for a in 0..n {
        for b in 0..n {
            let (ia, ib) = (fine.index_of(l * g.mode(a)), fine.index_of(l * g.mode(b)));
            if let (Some(ia), Some(ib)) = (ia, ib) {
                coeffs[ia * fine.n() + ib] = f.coeffs()[a * n + b] * scale;
            }
        }
    }
    let mut out = SpectralField::from_coeffs(fine, coeffs)?;
    if f.is_real() {
        out.symmetrize();
    }
    Ok(out)
}

/// `||G(h o T)[f o T] - c_T (G(h) f) o T||_2 / ||G(h) f||_2` for the series of
/// the given order; `c_T = lambda` for dilations and 1 otherwise.
pub fn symmetry_check(
    h: &SpectralField,
    f: &SpectralField,
    order: usize,
    transform: SymmetryTransform,
) -> Result<f64> {
    check_preconditions(h, f, order)?;
    let base = sum_terms(terms_unchecked(h, f, order));
    let denom = base.l2_norm();
    let (lhs, rhs) = match transform {
        SymmetryTransform::Dilation(lambda) => {
            if lambda == 0 {
                return Err(Error::Config("dilation factor must be a positive integer".into()));
            }
            let hl = upsample_modes(h, lambda, 1.0 / lambda as f64)?;
            let fl = upsample_modes(f, lambda, 1.0)?;
            let lhs = sum_terms(terms_unchecked(&hl, &fl, order));
            (lhs, upsample_modes(&base, lambda, lambda as f64)?)
        }
        t => {
            let lhs = sum_terms(terms_unchecked(&compose(h, t), &compose(f, t), order));
            (lhs, compose(&base, t))
        }
    };
    Ok((&lhs - &rhs).l2_norm() / denom)
}

/// Empirical constants of `||G_n(h) f||_2 <= C^n ||grad h||_inf^n ||grad f||_2`.
#[derive(Clone, Debug, Serialize)]
pub struct BoundProbe {
    pub order: usize,
    pub trials: usize,
    pub max_ratio: f64,
    pub ratios: Vec<f64>,
}

fn random_bumps(grid: GridSpec, rng: &mut impl Rng, count: usize, spread: f64) -> SpectralField {
    let mut out = SpectralField::zeros(grid);
    for _ in 0..count {
        let c = [rng.gen_range(-spread..spread), rng.gen_range(-spread..spread)];
        let w = rng.gen_range(0.5..1.0);
        let a = rng.gen_range(-1.0..1.0);
        out = &out + &crate::spectral::gaussian(grid, c, w, a);
    }
    out
}

/// Random localized trials of the order-`n` bound on `grid`.
pub fn multilinear_bound_probe(grid: GridSpec, n: usize, trials: usize, seed: u64) -> Result<BoundProbe> {
    if n > super::MAX_SERIES_ORDER {
        return Err(Error::OrderCap(n, super::MAX_SERIES_ORDER));
    }
    let mut rng = seeded(seed);
    let spread = 0.15 * grid.box_length();
    let mut ratios = Vec::with_capacity(trials);
    for _ in 0..trials {
        let mut h = random_bumps(grid, &mut rng, 3, spread);
        h.remove_mean();
        let slope = super::max_slope(&h);
        let h = h.scale(0.2 / slope);
        let f = random_bumps(grid, &mut rng, 3, spread);
        let term = terms_unchecked(&h, &f, n).pop().expect("order n term");
        let grad_f = {
            let [a, b] = f.gradient();
            (a.l2_norm().powi(2) + b.l2_norm().powi(2)).sqrt()
        };
        ratios.push(term.l2_norm() / (0.2f64.powi(n as i32) * grad_f));
    }
    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    Ok(BoundProbe { order: n, trials, max_ratio, ratios })
}

/// Largest `|<G_n f, g> - <f, G_n g>|` over `n <= order`, relative to
/// `||G_n f|| ||g|| + ||f|| ||G_n g||`.
pub fn self_adjoint_defect(h: &SpectralField, f: &SpectralField, g: &SpectralField, order: usize) -> Result<f64> {
    check_preconditions(h, f, order)?;
    f.check_grid(g)?;
    let tf = terms_unchecked(h, f, order);
    let tg = terms_unchecked(h, g, order);
    let mut worst: f64 = 0.0;
    for (a, b) in tf.iter().zip(&tg) {
        let lhs = a.inner(g)?;
        let rhs = f.inner(b)?;
        let scale = a.l2_norm() * g.l2_norm() + f.l2_norm() * b.l2_norm();
        if scale > 0.0 {
            worst = worst.max((lhs - rhs).norm() / scale);
        }
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LeibnizField {
    Partial(usize),
    Omega,
    /// `x . grad`, the generator of `h -> h(lambda .) / lambda, f -> f(lambda .)`.
    Sigma,
}

impl LeibnizField {
    fn apply(&self, f: &SpectralField) -> SpectralField {
        match *self {
            LeibnizField::Partial(i) => f.deriv(i),
            LeibnizField::Omega => omega(f),
            LeibnizField::Sigma => sigma(f),
        }
    }
}

/// Residual of the Leibniz rule for `Gamma [G(h) f]` through `order`,
/// relative to `||G(h) f||_2`:
///
/// ```text
/// Gamma G_n f = n M_n(Gamma h, h, .., f) + M_n(h, .., Gamma f)        (d, Omega)
/// Sigma G_n f = n M_n(Sigma h, h, .., f) + M_n(h, .., Sigma f) - (n+1) G_n f
/// ```
///
/// `n M_n(Gamma h, h, .., f)` is the derivative of `G_n(h + t Gamma h) f` at
/// `t = 0`, taken with a five-point stencil that is exact for the
/// polynomial dependence on `t` up to degree 4.
pub fn leibniz_gamma_check(h: &SpectralField, f: &SpectralField, order: usize, field: LeibnizField) -> Result<f64> {
    check_preconditions(h, f, order)?;
    if order > 4 {
        return Err(Error::OrderCap(order, 4));
    }
    if field != LeibnizField::Partial(0) && field != LeibnizField::Partial(1) {
        check_margin(h)?;
        check_margin(f)?;
    }
    let base = terms_unchecked(h, f, order);
    let gf = sum_terms(base.clone());
    if !matches!(field, LeibnizField::Partial(_)) {
        check_margin(&gf)?;
    }
    let lhs = field.apply(&gf);

    let gh = field.apply(h);
    let at = |t: f64| terms_unchecked(&(h + &gh.scale(t)), f, order);
    let (p1, m1, p2, m2) = (at(1.0), at(-1.0), at(2.0), at(-2.0));
    let from_f = terms_unchecked(h, &field.apply(f), order);
    let mut rhs = SpectralField::zeros(*h.grid());
    for nn in 0..=order {
        let d = &(&p1[nn] - &m1[nn]).scale(8.0 / 12.0) - &(&p2[nn] - &m2[nn]).scale(1.0 / 12.0);
        rhs = &(&rhs + &d) + &from_f[nn];
        if field == LeibnizField::Sigma {
            rhs = &rhs - &base[nn].scale((nn + 1) as f64);
        }
    }
    Ok((&lhs - &rhs).l2_norm() / gf.l2_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::gaussian;

    fn pair(g: GridSpec) -> (SpectralField, SpectralField) {
        let mut h = &gaussian(g, [0.4, -0.2], 0.6, 0.04) + &gaussian(g, [-0.5, 0.3], 0.5, -0.03);
        h.remove_mean();
        let f = &gaussian(g, [0.1, 0.6], 0.7, 1.0) + &gaussian(g, [-0.2, -0.4], 0.6, 0.5);
        (h, f)
    }

    #[test]
    fn grid_symmetries() {
        let g = GridSpec::unit(32).unwrap();
        let (h, f) = pair(g);
        for t in [
            SymmetryTransform::Translation(1, 0),
            SymmetryTransform::Translation(-3, 5),
            SymmetryTransform::Rotation(1),
            SymmetryTransform::Rotation(2),
            SymmetryTransform::Rotation(3),
        ] {
            let r = symmetry_check(&h, &f, 2, t).unwrap();
            assert!(r < 1e-10, "{t:?}: {r}");
        }
        let r = symmetry_check(&h, &f, 2, SymmetryTransform::Dilation(2)).unwrap();
        assert!(r < 1e-8, "dilation: {r}");
    }

    #[test]
    fn bound_probe_order_zero_is_one() {
        let g = GridSpec::unit(32).unwrap();
        let p = multilinear_bound_probe(g, 0, 4, 1).unwrap();
        assert!(p.ratios.iter().all(|r| (r - 1.0).abs() < 1e-12), "{:?}", p.ratios);
        let p1 = multilinear_bound_probe(g, 1, 6, 2).unwrap();
        assert!(p1.max_ratio.is_finite() && p1.max_ratio > 0.0);
    }

    #[test]
    fn series_terms_are_symmetric() {
        let g = GridSpec::unit(64).unwrap();
        let (h, f) = pair(g);
        let other = gaussian(g, [0.5, 0.5], 0.6, 1.0);
        let d = self_adjoint_defect(&h.scale(2.0), &f, &other, 3).unwrap();
        assert!(d < 1e-8, "{d}");
    }

    #[test]
    fn leibniz_for_derivatives_and_rotation() {
        let g = GridSpec::unit(32).unwrap();
        let (h, f) = pair(g);
        assert!(leibniz_gamma_check(&h, &f, 0, LeibnizField::Partial(0)).unwrap() < 1e-12);
        assert!(leibniz_gamma_check(&h, &f, 2, LeibnizField::Partial(1)).unwrap() < 1e-10);
        // radial data: both sides vanish up to the periodisation of the |x|^-3 tail
        let g = GridSpec::new(128, 40.0).unwrap();
        let (h, _) = harmonic_pair(g, 3, 0);
        let f = gaussian(g, [0.0, 0.0], 1.2, 1.0);
        let r = leibniz_gamma_check(&h, &f, 2, LeibnizField::Omega).unwrap();
        assert!(r < 5e-3, "{r}");
    }

    /// Radial `h` and `f` with angular dependence `cos(p theta + phase)`. Every
    /// series term then decays like `|x|^-(p+3)`, which keeps the
    /// periodisation error of the coordinate-weighted fields small.
    fn harmonic_pair(g: GridSpec, seed: u64, p: i32) -> (SpectralField, SpectralField) {
        let mut rng = seeded(seed);
        let (w1, w2) = (rng.gen_range(0.8..1.2), rng.gen_range(0.8..1.2));
        let (b1, b2) = (rng.gen_range(0.2..0.6), rng.gen_range(-0.5..0.5));
        let phase = rng.gen_range(0.0..6.28);
        let mut h = SpectralField::from_fn(g, move |x, y| {
            let r2 = x * x + y * y;
            0.05 * ((-r2 / (2.0 * w1 * w1)).exp() + b1 * (-r2 / (0.5 * w1 * w1)).exp())
        });
        h.remove_mean();
        let f = SpectralField::from_fn(g, move |x, y| {
            let r2 = x * x + y * y;
            let th = y.atan2(x);
            r2.powi(p / 2) * (p as f64 * th + phase).cos() * ((-r2 / (2.0 * w2 * w2)).exp() + b2 * (-r2 / (w2 * w2)).exp())
        });
        (h, f)
    }

    #[test]
    fn leibniz_for_rotation_and_dilation_generators() {
        let g = GridSpec::new(256, 36.0).unwrap();
        for seed in 0..2 {
            let (h, f) = harmonic_pair(g, seed, 8);
            for (field, order) in [(LeibnizField::Omega, 2), (LeibnizField::Sigma, 1), (LeibnizField::Sigma, 2)] {
                let r = leibniz_gamma_check(&h, &f, order, field).unwrap();
                assert!(r < 1e-6, "{field:?} order {order}: {r}");
            }
        }
    }
}
