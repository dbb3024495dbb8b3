//! The commuting vector fields `d1, d2`, rotation `Omega` and the spatial
//! Euler operator `Sigma = x . grad`, and the weighted norms built from them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{GridSpec, SpectralField};
use crate::{Error, Result};

/// Fraction of the box half-width treated as the outer margin.
const MARGIN_WIDTH: f64 = 0.1;
/// Share of the l2 mass allowed in the margin before a warning is raised.
pub const MARGIN_TOLERANCE: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VectorFieldTag {
    Partial1,
    Partial2,
    Omega,
    Sigma,
}

/// Result of applying a coordinate-weighted vector field.
#[derive(Clone, Debug)]
pub struct VectorFieldOutput {
    pub field: SpectralField,
    /// Set when the input had at least 1% of its l2 mass in the outer 10% of the box.
    pub margin_warning: Option<f64>,
}

/// Share of the l2 mass of `f` lying where `max(|x1|, |x2|) > 0.4 L`.
pub fn margin_fraction(f: &SpectralField) -> f64 {
    let g = f.grid();
    let n = g.n();
    let inner = (0.5 - MARGIN_WIDTH) * g.box_length();
    let values = f.to_complex_values();
    let (mut total, mut outer) = (0.0, 0.0);
    for j1 in 0..n {
        for j2 in 0..n {
            let w = values[j1 * n + j2].norm_sqr();
            total += w;
            if g.coord(j1).abs() > inner || g.coord(j2).abs() > inner {
                outer += w;
            }
        }
    }
    if total > 0.0 {
        outer / total
    } else {
        0.0
    }
}

/// Errors when the margin rule is violated.
pub fn check_margin(f: &SpectralField) -> Result<()> {
    let m = margin_fraction(f);
    if m >= MARGIN_TOLERANCE {
        Err(Error::Margin(m))
    } else {
        Ok(())
    }
}

fn weighted_sum(grid: &GridSpec, parts: [(&[Complex64], usize, f64); 2]) -> Vec<Complex64> {
    // sum over parts of sign * x_axis * values
    let n = grid.n();
    let mut out = vec![Complex64::default(); grid.len()];
    for (values, axis, sign) in parts {
        for j1 in 0..n {
            for j2 in 0..n {
                let x = if axis == 0 { grid.coord(j1) } else { grid.coord(j2) };
                out[j1 * n + j2] += values[j1 * n + j2] * (sign * x);
            }
        }
    }
    out
}

/// `Omega f = x1 d2 f - x2 d1 f`.
pub fn omega(f: &SpectralField) -> SpectralField {
    let g = *f.grid();
    let d1 = f.deriv(0).to_complex_values();
    let d2 = f.deriv(1).to_complex_values();
    let v = weighted_sum(&g, [(&d2, 0, 1.0), (&d1, 1, -1.0)]);
    finish(g, &v, f.is_real())
}

/// `Sigma f = x1 d1 f + x2 d2 f`.
pub fn sigma(f: &SpectralField) -> SpectralField {
    let g = *f.grid();
    let d1 = f.deriv(0).to_complex_values();
    let d2 = f.deriv(1).to_complex_values();
    let v = weighted_sum(&g, [(&d1, 0, 1.0), (&d2, 1, 1.0)]);
    finish(g, &v, f.is_real())
}

fn finish(g: GridSpec, v: &[Complex64], real: bool) -> SpectralField {
    if real {
        let re: Vec<f64> = v.iter().map(|z| z.re).collect();
        SpectralField::from_real_values(g, &re).expect("grid length")
    } else {
        SpectralField::from_complex_values(g, v).expect("grid length")
    }
}

/// Applies one vector field, flagging data that reaches the box margin.
pub fn apply_vector_field(f: &SpectralField, tag: VectorFieldTag) -> VectorFieldOutput {
    let field = match tag {
        VectorFieldTag::Partial1 => f.deriv(0),
        VectorFieldTag::Partial2 => f.deriv(1),
        VectorFieldTag::Omega => omega(f),
        VectorFieldTag::Sigma => sigma(f),
    };
    let margin_warning = match tag {
        VectorFieldTag::Omega | VectorFieldTag::Sigma => {
            Some(margin_fraction(f)).filter(|&m| m >= MARGIN_TOLERANCE)
        }
        _ => None,
    };
    VectorFieldOutput { field, margin_warning }
}

/// Multi-index `(g1, g2, g3)` for `S^g1 Omega^g2 d^(3 g3)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MultiIndex(pub usize, pub usize, pub usize);

impl MultiIndex {
    pub fn order(&self) -> usize {
        self.0 + self.1 + self.2
    }

    /// All multi-indices with `|gamma| <= ell`.
    pub fn up_to(ell: usize) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for g1 in 0..=ell {
            for g2 in 0..=ell - g1 {
                for g3 in 0..=ell - g1 - g2 {
                    out.push(MultiIndex(g1, g2, g3));
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormExponent {
    Two,
    Infinity,
}

impl NormExponent {
    pub fn of(&self, f: &SpectralField) -> f64 {
        match self {
            NormExponent::Two => f.l2_norm(),
            NormExponent::Infinity => f.sup_norm(),
        }
    }
}

/// `||u||_{W^{k,p}} = ||(1 + Lambda^k) u||_p`, with `W^{0,p} = L^p`.
pub fn sobolev_norm(f: &SpectralField, k: f64, p: NormExponent) -> f64 {
    if k == 0.0 {
        p.of(f)
    } else {
        p.of(&f.apply_radial(|r| 1.0 + r.powf(k), false))
    }
}

/// Weighted norm output with the accumulated margin flag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedNorm {
    pub value: f64,
    pub margin_warning: Option<f64>,
}

/// `sum_{|gamma| <= ell} ||Gamma^gamma f||_{W^{k,p}}` where the scaling slot
/// is filled by `scaling` (the spatial `Sigma` unless a caller supplies the
/// full space-time field).
pub fn weighted_norm_with(
    f: &SpectralField,
    k: f64,
    p: NormExponent,
    ell: usize,
    scaling: &dyn Fn(&SpectralField) -> SpectralField,
) -> WeightedNorm {
    let mut value = 0.0;
    let mut warn: Option<f64> = None;
    let mut note = |m: f64| {
        if m >= MARGIN_TOLERANCE {
            warn = Some(warn.map_or(m, |w: f64| w.max(m)));
        }
    };
    for gamma in MultiIndex::up_to(ell) {
        for i1 in 0..=3 * gamma.2 {
            let i2 = 3 * gamma.2 - i1;
            let mut g = f.clone();
            for _ in 0..i1 {
                g = g.deriv(0);
            }
            for _ in 0..i2 {
                g = g.deriv(1);
            }
            for _ in 0..gamma.1 {
                note(margin_fraction(&g));
                g = omega(&g);
            }
            for _ in 0..gamma.0 {
                note(margin_fraction(&g));
                g = scaling(&g);
            }
            value += sobolev_norm(&g, k, p);
        }
    }
    WeightedNorm { value, margin_warning: warn }
}

/// `||f||_{W^{k,p}_ell}` with `Sigma` in the scaling slot.
pub fn weighted_sobolev_norm(f: &SpectralField, k: f64, p: NormExponent, ell: usize) -> WeightedNorm {
    weighted_norm_with(f, k, p, ell, &sigma)
}

/// `||(Lambda^a Sigma - Sigma Lambda^a) f - a Lambda^a f||_2 / ||f||_2`.
///
/// Dilation covariance gives `Sigma Lambda^a - Lambda^a Sigma = -a Lambda^a`,
/// so the residual vanishes up to periodisation error for localised data.
pub fn sigma_lambda_commutator_residual(f: &SpectralField, alpha: f64) -> f64 {
    let lhs = &sigma(f).lambda_pow(alpha) - &sigma(&f.lambda_pow(alpha));
    let rhs = f.lambda_pow(alpha).scale(alpha);
    (&lhs - &rhs).l2_norm() / f.l2_norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{gaussian, GridSpec};

    fn bump(g: GridSpec, cx: f64, cy: f64, w: f64) -> SpectralField {
        SpectralField::from_fn(g, move |x, y| (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * w * w)).exp())
    }

    #[test]
    fn omega_annihilates_radial() {
        let g = GridSpec::new(64, 24.0).unwrap();
        let f = bump(g, 0.0, 0.0, 1.5);
        let out = apply_vector_field(&f, VectorFieldTag::Omega);
        assert!(out.margin_warning.is_none());
        let r = out.field.l2_norm() / f.l2_norm();
        assert!(r < 1e-10, "{r}");
    }

    #[test]
    fn omega_and_sigma_commute_with_quarter_turn() {
        let g = GridSpec::new(64, 20.0).unwrap();
        let f = bump(g, 1.0, -0.5, 1.2);
        let rot = SpectralField::from_fn(g, |x, y| {
            (-((-y - 1.0).powi(2) + (x + 0.5).powi(2)) / (2.0 * 1.44)).exp()
        });
        for tag in [VectorFieldTag::Omega, VectorFieldTag::Sigma] {
            let a = apply_vector_field(&f, tag).field.to_real_values();
            let b = apply_vector_field(&rot, tag).field.to_real_values();
            let n = g.n();
            // rotated field sampled at (x1, x2) equals original at (-x2, x1)
            let mut err: f64 = 0.0;
            for j1 in 1..n {
                for j2 in 1..n {
                    let i1 = n - j2;
                    let i2 = j1;
                    err = err.max((b[j1 * n + j2] - a[i1 * n + i2]).abs());
                }
            }
            assert!(err < 1e-10, "{tag:?}: {err}");
        }
    }

    #[test]
    fn sigma_is_euler_homogeneous() {
        let g = GridSpec::new(128, 24.0).unwrap();
        let f = bump(g, 0.5, 0.2, 0.8);
        let f2 = bump(g, 0.25, 0.1, 0.4); // f(2x)
        let s1 = sigma(&f).to_real_values();
        let s2 = sigma(&f2).to_real_values();
        let n = g.n();
        let mut err: f64 = 0.0;
        for j1 in n / 4..3 * n / 4 {
            for j2 in n / 4..3 * n / 4 {
                let (i1, i2) = (2 * j1 - n / 2, 2 * j2 - n / 2);
                err = err.max((s2[j1 * n + j2] - s1[i1 * n + i2]).abs());
            }
        }
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn margin_flag() {
        let g = GridSpec::new(32, 10.0).unwrap();
        let wide = bump(g, 0.0, 0.0, 3.0);
        assert!(apply_vector_field(&wide, VectorFieldTag::Sigma).margin_warning.is_some());
        assert!(check_margin(&wide).is_err());
        let narrow = bump(g, 0.0, 0.0, 0.7);
        assert!(check_margin(&narrow).is_ok());
    }

    #[test]
    fn norm_examples() {
        let g = GridSpec::unit(32).unwrap();
        let f = SpectralField::from_fn(g, |x, y| (x.sin() + (2.0 * y).cos()) * 0.3);
        let n0 = weighted_sobolev_norm(&f, 0.0, NormExponent::Two, 0).value;
        assert!((n0 - f.l2_norm()).abs() < 1e-14);
        let mode = SpectralField::from_fn(g, |_, y| (2.0 * y).cos());
        let n1 = weighted_sobolev_norm(&mode, 1.0, NormExponent::Two, 0).value;
        assert!((n1 - 3.0 * mode.l2_norm()).abs() < 1e-12);
    }

    #[test]
    fn norm_monotone_in_k_and_ell() {
        let g = GridSpec::new(64, 2.0 * std::f64::consts::PI * 3.0).unwrap();
        let f = gaussian(g, [0.3, -0.2], 1.0, 1.0);
        let mut last = 0.0;
        for k in [0.0, 0.5, 1.0, 2.0] {
            let v = weighted_sobolev_norm(&f, k, NormExponent::Two, 1).value;
            assert!(v >= last);
            last = v;
        }
        let a = weighted_sobolev_norm(&f, 1.0, NormExponent::Two, 0).value;
        let b = weighted_sobolev_norm(&f, 1.0, NormExponent::Two, 1).value;
        assert!(b >= a);
    }

    #[test]
    fn sigma_norm_matches_dilation_finite_difference() {
        // ||Sigma f||_2 from spectral derivatives versus d/dlambda f(lambda x)
        let g = GridSpec::new(96, 24.0).unwrap();
        let w = 1.1;
        let c = [0.4, -0.3];
        let prof = move |x: f64, y: f64| (-((x - c[0]).powi(2) + (y - c[1]).powi(2)) / (2.0 * w * w)).exp() * (1.0 + 0.3 * x);
        let f = SpectralField::from_fn(g, prof);
        let h = 1e-4;
        let fd = SpectralField::from_fn(g, move |x, y| {
            let p = 1.0 + h;
            let m = 1.0 - h;
            (prof(p * x, p * y) - prof(m * x, m * y)) / (2.0 * h)
        });
        let spectral = weighted_sobolev_norm(&f, 0.0, NormExponent::Two, 1).value;
        let oracle = f.l2_norm() + omega(&f).l2_norm() + fd.l2_norm()
            + (0..=3).map(|i1| {
                let mut d = f.clone();
                for _ in 0..i1 { d = d.deriv(0); }
                for _ in 0..3 - i1 { d = d.deriv(1); }
                d.l2_norm()
            }).sum::<f64>();
        assert!((spectral - oracle).abs() / oracle < 1e-7, "{spectral} vs {oracle}");
    }

    #[test]
    fn sigma_lambda_commutator() {
        // sixth Laplacian power of a Gaussian: vanishing moments keep Lambda^a f localised
        let g = GridSpec::new(128, 40.0).unwrap();
        let f = gaussian(g, [0.0, 0.0], 1.0, 1.0).laplacian().laplacian().laplacian();
        let r = sigma_lambda_commutator_residual(&f, 0.5);
        assert!(r < 1e-6, "{r}");
        // the opposite sign is far off
        let wrong = {
            let lhs = &sigma(&f.lambda_pow(0.5)) - &sigma(&f).lambda_pow(0.5);
            (&lhs - &f.lambda_pow(0.5).scale(0.5)).l2_norm() / f.l2_norm()
        };
        assert!(wrong > 0.1);
    }
}
