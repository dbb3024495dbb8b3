//! Multilinear expansion `G(h) = sum_n G_n(h)` of the Dirichlet–Neumann operator.
//!
//! With `phi = exp(z |D|) A` and `A = sum_n a_n` (`a_n` homogeneous of degree
//! `n` in `h`), the Dirichlet condition `phi(x, h(x)) = f` gives
//!
//! ```text
//! a_0 = f,    a_n = - sum_{j=1..n} h^j / j! |D|^j a_{n-j},
//! ```
//!
//! and `G f = (d_z phi - grad h . grad_x phi)|_{z=h}` collects to
//!
//! ```text
//! G_n f = sum_{j=0..n} h^j / j! |D|^{j+1} a_{n-j}
//!       - grad h . sum_{j=0..n-1} h^j / j! grad |D|^j a_{n-1-j}.
//! ```
//!
//! `G_1 f = -div(h grad f) - |D|(h |D| f)`.

use num_complex::Complex64;

use super::{MAX_SERIES_ORDER, SLOPE_GUARD};
use crate::spectral::SpectralField;
use crate::{Error, Result};

/// `max |grad h|` over the grid.
pub fn max_slope(h: &SpectralField) -> f64 {
    let d1 = h.deriv(0).to_complex_values();
    let d2 = h.deriv(1).to_complex_values();
    d1.iter().zip(&d2).map(|(a, b)| (a.norm_sqr() + b.norm_sqr()).sqrt()).fold(0.0, f64::max)
}

pub(crate) fn check_preconditions(h: &SpectralField, f: &SpectralField, order: usize) -> Result<()> {
    h.check_grid(f)?;
    if order > MAX_SERIES_ORDER {
        return Err(Error::OrderCap(order, MAX_SERIES_ORDER));
    }
    let slope = max_slope(h);
    if !(slope < SLOPE_GUARD) {
        return Err(Error::SlopeGuard(slope, SLOPE_GUARD));
    }
    Ok(())
}

/// The homogeneous pieces `G_0 f, ..., G_N f`.
pub fn dno_terms(h: &SpectralField, f: &SpectralField, order: usize) -> Result<Vec<SpectralField>> {
    check_preconditions(h, f, order)?;
    Ok(terms_unchecked(h, f, order))
}

/// `sum_{n <= order} G_n(h) f`.
pub fn dno_series(h: &SpectralField, f: &SpectralField, order: usize) -> Result<SpectralField> {
    check_preconditions(h, f, order)?;
    Ok(sum_terms(terms_unchecked(h, f, order)))
}

pub(crate) fn sum_terms(terms: Vec<SpectralField>) -> SpectralField {
    let mut it = terms.into_iter();
    let first = it.next().expect("order 0 is always present");
    it.fold(first, |acc, t| &acc + &t)
}

struct Physical {
    real: bool,
}

impl Physical {
    fn values(&self, f: &SpectralField) -> Vec<Complex64> {
        f.to_complex_values()
    }

    fn field(&self, like: &SpectralField, v: Vec<Complex64>) -> SpectralField {
        let grid = *like.grid();
        let out = if self.real {
            let re: Vec<f64> = v.iter().map(|z| z.re).collect();
            SpectralField::from_real_values(grid, &re)
        } else {
            SpectralField::from_complex_values(grid, &v)
        };
        out.expect("grid length").dealiased()
    }
}

fn axpy(acc: &mut [Complex64], weight: &[f64], x: &[Complex64], sign: f64) {
    for ((a, w), v) in acc.iter_mut().zip(weight).zip(x) {
        *a += v * (sign * w);
    }
}

pub(crate) fn terms_unchecked(h: &SpectralField, f: &SpectralField, order: usize) -> Vec<SpectralField> {
    let ph = Physical { real: h.is_real() && f.is_real() };
    let mut terms = vec![f.lambda_pow(1.0)];
    if order == 0 {
        return terms;
    }
    let len = h.grid().len();
    let hv: Vec<f64> = h.to_real_values();
    // hp[j] = h^j / j!
    let mut hp = vec![vec![1.0; len]];
    for j in 1..=order {
        let prev = &hp[j - 1];
        let next: Vec<f64> = prev.iter().zip(&hv).map(|(p, x)| p * x / j as f64).collect();
        hp.push(next);
    }
    let dh: Vec<Vec<f64>> = (0..2).map(|i| h.deriv(i).to_real_values()).collect();

    let mut a = vec![f.clone()];
    for m in 1..=order {
        let mut acc = vec![Complex64::default(); len];
        for j in 1..=m {
            axpy(&mut acc, &hp[j], &ph.values(&a[m - j].lambda_pow(j as f64)), -1.0);
        }
        a.push(ph.field(f, acc));

        let mut acc = vec![Complex64::default(); len];
        for j in 1..=m {
            axpy(&mut acc, &hp[j], &ph.values(&a[m - j].lambda_pow((j + 1) as f64)), 1.0);
        }
        for (i, dhi) in dh.iter().enumerate() {
            let mut inner = vec![Complex64::default(); len];
            for j in 0..m {
                axpy(&mut inner, &hp[j], &ph.values(&a[m - 1 - j].lambda_pow(j as f64).deriv(i)), 1.0);
            }
            axpy(&mut acc, dhi, &inner, -1.0);
        }
        terms.push(&a[m].lambda_pow(1.0) + &ph.field(f, acc));
    }
    terms
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{gaussian, GridSpec};

    #[test]
    fn flat_surface_is_lambda() {
        let g = GridSpec::unit(64).unwrap();
        let h = SpectralField::zeros(g);
        let f = gaussian(g, [0.3, -0.5], 0.7, 1.0);
        let lf = f.lambda_pow(1.0);
        for order in 0..=4 {
            let s = dno_series(&h, &f, order).unwrap();
            assert!(s.max_rel_diff(&lf) <= 1e-12);
        }
        let mode = SpectralField::from_fn(g, |x, y| (2.0 * x + y).cos());
        let s = dno_series(&h, &mode, 2).unwrap();
        assert!(s.max_rel_diff(&mode.scale(5f64.sqrt())) < 1e-13);
    }

    #[test]
    fn first_order_matches_quadratic_formula() {
        let g = GridSpec::unit(32).unwrap();
        let h = gaussian(g, [0.1, 0.2], 0.8, 0.05);
        let f = gaussian(g, [-0.4, 0.0], 0.9, 1.0);
        let t = dno_terms(&h, &f, 1).unwrap();
        let hf = [0, 1].map(|i| h.product(&f.deriv(i)).unwrap().deriv(i));
        let expected = &(&hf[0] + &hf[1]).scale(-1.0) - &h.product(&f.lambda_pow(1.0)).unwrap().lambda_pow(1.0);
        assert!(t[1].max_rel_diff(&expected) < 1e-12);
    }

    #[test]
    fn one_dimensional_closed_form() {
        // h = eps cos(a x), f = cos(b x) in one dimension:
        //   -d(h f')       = eps b/2 [ (a+b) cos((a+b)x) - (a-b) cos((a-b)x) ]
        //   -|D|(h |D| f)  = -eps b/2 [ (a+b) cos((a+b)x) + |a-b| cos((a-b)x) ]
        // so G_1 f = 0 when a < b and -eps b (a-b) cos((a-b)x) when a > b.
        let g = GridSpec::unit(32).unwrap();
        let (a, b, eps) = (2.0, 5.0, 0.01);
        let h = SpectralField::from_fn(g, move |x, _| eps * (a * x).cos());
        let f = SpectralField::from_fn(g, move |x, _| (b * x).cos());
        let t = dno_terms(&h, &f, 1).unwrap();
        assert!(t[1].l2_norm() < 1e-14 * t[0].l2_norm());
        let f = SpectralField::from_fn(g, move |x, _| x.cos());
        let t = dno_terms(&h, &f, 1).unwrap();
        let bb = 1.0;
        let coef = -eps * bb * (a - bb);
        let expected = SpectralField::from_fn(g, move |x, _| coef * ((a - bb) * x).cos());
        assert!(t[1].max_rel_diff(&expected) < 1e-12);
    }

    #[test]
    fn slope_guard_and_order_cap() {
        let g = GridSpec::unit(32).unwrap();
        let steep = SpectralField::from_fn(g, |x, _| 0.6 * x.sin());
        let f = gaussian(g, [0.0, 0.0], 1.0, 1.0);
        assert!(matches!(dno_series(&steep, &f, 1), Err(Error::SlopeGuard(..))));
        let h = steep.scale(0.1);
        assert!(matches!(dno_series(&h, &f, 7), Err(Error::OrderCap(7, 6))));
    }
}
