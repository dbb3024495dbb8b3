use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::{fft, GridSpec};
use crate::{Error, Result};

/// Relative tolerance used when deciding whether coefficients are Hermitian.
const HERMITIAN_TOL: f64 = 1e-12;

/// A scalar field on the box, stored by its Fourier coefficients.
///
/// Coefficients are kept in FFT order, index `a * n + b` holding the mode
/// `(m(a), m(b))`. `is_real` records Hermitian symmetry of the coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
    is_real: bool,
}

impl SpectralField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, coeffs: vec![Complex64::default(); grid.len()], is_real: true }
    }

    /// Forward transform of real samples.
    pub fn from_real_values(grid: GridSpec, values: &[f64]) -> Result<Self> {
        check_len(&grid, values.len())?;
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft::forward(&grid, &mut buf);
        let mut f = Self { grid, coeffs: buf, is_real: true };
        f.symmetrize();
        Ok(f)
    }

    /// Forward transform of complex samples.
    pub fn from_complex_values(grid: GridSpec, values: &[Complex64]) -> Result<Self> {
        check_len(&grid, values.len())?;
        let mut buf = values.to_vec();
        fft::forward(&grid, &mut buf);
        let exact = values.iter().all(|v| v.im == 0.0);
        let mut f = Self { grid, coeffs: buf, is_real: exact };
        if exact {
            f.symmetrize();
        } else {
            f.refresh_reality();
        }
        Ok(f)
    }

    /// Builds a field from coefficients; reality is detected, not assumed.
    pub fn from_coeffs(grid: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        check_len(&grid, coeffs.len())?;
        let mut f = Self { grid, coeffs, is_real: false };
        f.is_real = f.hermitian_defect() <= HERMITIAN_TOL;
        Ok(f)
    }

    /// Samples `f(x1, x2)` at the grid points.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.len());
        for j1 in 0..n {
            for j2 in 0..n {
                values.push(f(grid.coord(j1), grid.coord(j2)));
            }
        }
        Self::from_real_values(grid, &values).expect("length matches grid")
    }

    /// Sets each coefficient from a function of the wavevector. The Nyquist
    /// row and column are left at zero.
    pub fn from_spectrum(grid: GridSpec, f: impl Fn([f64; 2]) -> Complex64) -> Self {
        let n = grid.n();
        let mut coeffs = vec![Complex64::default(); grid.len()];
        for a in 0..n {
            for b in 0..n {
                if !grid.is_nyquist(a, b) {
                    coeffs[a * n + b] = f(grid.wavevector(a, b));
                }
            }
        }
        Self::from_coeffs(grid, coeffs).expect("length matches grid")
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Mutable access; the reality flag is re-detected by [`Self::refresh_reality`].
    #[inline]
    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    #[inline]
    pub fn is_real(&self) -> bool {
        self.is_real
    }

    pub fn refresh_reality(&mut self) {
        self.is_real = self.hermitian_defect() <= HERMITIAN_TOL;
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient of the signed mode `(m1, m2)`; zero when not representable.
    pub fn coeff(&self, m1: i64, m2: i64) -> Complex64 {
        match (self.grid.index_of(m1), self.grid.index_of(m2)) {
            (Some(a), Some(b)) => self.coeffs[a * self.grid.n() + b],
            _ => Complex64::default(),
        }
    }

    pub fn set_coeff(&mut self, m1: i64, m2: i64, value: Complex64) {
        let n = self.grid.n();
        let a = self.grid.index_of(m1).expect("mode in range");
        let b = self.grid.index_of(m2).expect("mode in range");
        self.coeffs[a * n + b] = value;
        self.refresh_reality();
    }

    /// Inverse transform to complex samples.
    pub fn to_complex_values(&self) -> Vec<Complex64> {
        let mut buf = self.coeffs.clone();
        fft::inverse(&self.grid, &mut buf);
        buf
    }

    /// Real part of the samples.
    pub fn to_real_values(&self) -> Vec<f64> {
        self.to_complex_values().into_iter().map(|z| z.re).collect()
    }

    /// Zero-mode coefficient, i.e. the box average.
    pub fn mean(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// Continuum `L^2` norm, `(int |f|^2 dx)^(1/2) = L (sum |c|^2)^(1/2)`.
    pub fn l2_norm(&self) -> f64 {
        self.grid.box_length() * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Grid maximum of `|f|`.
    pub fn sup_norm(&self) -> f64 {
        self.to_complex_values().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Continuum inner product `int f conj(g) dx`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.check_grid(other)?;
        let s: Complex64 = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b.conj()).sum();
        Ok(s * self.grid.box_length().powi(2))
    }

    /// Maximum of `|c(m) - conj(c(-m))|` over paired modes, relative to `max |c|`.
        pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.n();
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let c = self.coeffs[a * n + b];
                let (ma, mb) = self.grid.mirror(a, b);
                let d = (c - self.coeffs[ma * n + mb].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst / scale
    }

    /// Projects onto Hermitian-symmetric coefficients and returns the size of
    /// the correction relative to `max |c|`.
    pub fn symmetrize(&mut self) -> f64 {
        let n = self.grid.n();
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let idx = a * n + b;
                let c = self.coeffs[idx];
                let (ma, mb) = self.grid.mirror(a, b);
                let target = 0.5 * (c + self.coeffs[ma * n + mb].conj());
                worst = worst.max((target - c).norm());
                self.coeffs[idx] = target;
            }
        }
        self.is_real = true;
        if scale > 0.0 {
            worst / scale
        } else {
            0.0
        }
    }

    /// Zeroes coefficients outside the dealiasing mask (and the Nyquist modes).
    pub fn dealias(&mut self) {
        let n = self.grid.n();
        for a in 0..n {
            for b in 0..n {
                if !self.grid.keeps(a, b) {
                    self.coeffs[a * n + b] = Complex64::default();
                }
            }
        }
    }

    pub fn dealiased(mut self) -> Self {
        self.dealias();
        self
    }

    /// Zeroes the mean.
    pub fn remove_mean(&mut self) {
        self.coeffs[0] = Complex64::default();
    }

    /// Coefficient-wise product with `symbol(k)`.
    ///
    /// The zero mode uses the symbol value when it is finite and is mapped to
    /// zero otherwise; a non-finite value at any other mode is an error.
    pub fn apply_multiplier(&self, symbol: impl Fn([f64; 2]) -> Complex64) -> Result<Self> {
        let n = self.grid.n();
        let mut out = Vec::with_capacity(self.coeffs.len());
        for a in 0..n {
            for b in 0..n {
                let k = self.grid.wavevector(a, b);
                let s = symbol(k);
                let finite = s.re.is_finite() && s.im.is_finite();
                let c = self.coeffs[a * n + b];
                if a == 0 && b == 0 {
                    out.push(if finite { s * c } else { Complex64::default() });
                } else if finite {
                    out.push(s * c);
                } else {
                    return Err(Error::NonFiniteSymbol(k[0], k[1]));
                }
            }
        }
        Self::from_coeffs(self.grid, out)
    }

    /// Real-valued radial multiplier `s(|k|)`; the zero mode is set to zero
    /// whenever `s(0)` is not finite or `zero_to_zero` is requested.
    pub fn apply_radial(&self, s: impl Fn(f64) -> f64, zero_to_zero: bool) -> Self {
        let n = self.grid.n();
        let mut out = self.clone();
        for a in 0..n {
            for b in 0..n {
                let idx = a * n + b;
                if a == 0 && b == 0 {
                    let v = s(0.0);
                    out.coeffs[idx] = if zero_to_zero || !v.is_finite() {
                        Complex64::default()
                    } else {
                        self.coeffs[idx] * v
                    };
                } else {
                    let k = self.grid.wavevector(a, b);
                    out.coeffs[idx] = self.coeffs[idx] * s(k[0].hypot(k[1]));
                }
            }
        }
        out
    }

    /// `Lambda^alpha = |D|^alpha`; the zero mode is mapped to zero.
    pub fn lambda_pow(&self, alpha: f64) -> Self {
        if alpha == 0.0 {
            return self.clone();
        }
        if alpha == 1.0 {
            return self.apply_radial(|r| r, true);
        }
        self.apply_radial(|r| r.powf(alpha), true)
    }

    /// `Y(D) = Lambda^iota + Lambda^-iota`; the zero mode is mapped to zero.
    pub fn y_weight(&self, iota: f64) -> Self {
        self.apply_radial(|r| r.powf(iota) + r.powf(-iota), true)
    }

    /// Spectral partial derivative along `axis` (0 for `x1`, 1 for `x2`).
    /// The Nyquist modes are dropped so that real fields stay real.
    pub fn deriv(&self, axis: usize) -> Self {
        let n = self.grid.n();
        let mut out = self.clone();
        for a in 0..n {
            for b in 0..n {
                let idx = a * n + b;
                if self.grid.is_nyquist(a, b) {
                    out.coeffs[idx] = Complex64::default();
                } else {
                    let k = self.grid.wavevector(a, b)[axis];
                    out.coeffs[idx] = self.coeffs[idx] * Complex64::new(0.0, k);
                }
            }
        }
        out
    }

    /// Spectral gradient `(d1 f, d2 f)`.
    pub fn gradient(&self) -> [Self; 2] {
        [self.deriv(0), self.deriv(1)]
    }

    /// Spectral Laplacian.
    pub fn laplacian(&self) -> Self {
        self.apply_radial(|r| -r * r, false)
    }

    /// Dealiased pointwise product.
    pub fn product(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        let a = self.to_complex_values();
        let b = other.to_complex_values();
        let prod: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        let mut out = Self::from_complex_values(self.grid, &prod)?;
        if self.is_real && other.is_real {
            out.symmetrize();
        }
        out.dealias();
        Ok(out)
    }

    /// Pointwise complex conjugate (coefficients `conj(c(-m))`).
    pub fn conj(&self) -> Self {
        let n = self.grid.n();
        let mut out = self.clone();
        for a in 0..n {
            for b in 0..n {
                // Nyquist indices mirror onto themselves through aliasing
                let (ma, mb) = self.grid.mirror(a, b);
                out.coeffs[a * n + b] = self.coeffs[ma * n + mb].conj();
            }
        }
        out
    }

    /// Real part of the samples as a field.
    pub fn real_part(&self) -> Self {
        let c = self.conj();
        let mut out = self.zip_with(&c, |x, y| 0.5 * (x + y));
        out.symmetrize();
        out
    }

    /// Imaginary part of the samples as a field.
    pub fn imag_part(&self) -> Self {
        let c = self.conj();
        let mut out = self.zip_with(&c, |x, y| (x - y) * Complex64::new(0.0, -0.5));
        out.symmetrize();
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|c| c * s)
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        let mut out = self.map(|c| c * s);
        out.refresh_reality();
        out
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self { grid: self.grid, coeffs: self.coeffs.iter().map(|&c| f(c)).collect(), is_real: self.is_real }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| f(a, b)).collect(),
            is_real: self.is_real && other.is_real,
        }
    }

    pub fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Relative coefficient-wise distance `max |a - b| / max |b|`.
    pub fn max_rel_diff(&self, reference: &Self) -> f64 {
        let scale = reference.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let d = self.coeffs.iter().zip(&reference.coeffs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if scale > 0.0 {
            d / scale
        } else {
            d
        }
    }
}

fn check_len(grid: &GridSpec, got: usize) -> Result<()> {
    if got == grid.len() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected: grid.len(), got })
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: Self) -> SpectralField {
        assert_eq!(self.grid, rhs.grid, "grid mismatch");
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: Self) -> SpectralField {
        assert_eq!(self.grid, rhs.grid, "grid mismatch");
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.map(|c| -c)
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scale(rhs)
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    fn random_real(grid: GridSpec, seed: u64) -> SpectralField {
        let mut rng = seeded(seed);
        let values: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        SpectralField::from_real_values(grid, &values).unwrap()
    }

    #[test]
    fn constant_has_only_zero_mode() {
        let g = GridSpec::unit(16).unwrap();
        let f = SpectralField::from_fn(g, |_, _| 1.0);
        assert!((f.coeff(0, 0) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let others: f64 = f.coeffs().iter().skip(1).map(|c| c.norm()).sum();
        assert!(others < 1e-14);
    }

    #[test]
    fn cosine_has_two_symmetric_modes() {
        let g = GridSpec::new(16, 3.0).unwrap();
        let f = SpectralField::from_fn(g, |x, _| (2.0 * PI * x / 3.0).cos());
        assert!((f.coeff(1, 0).re - 0.5).abs() < 1e-14);
        assert!((f.coeff(-1, 0).re - 0.5).abs() < 1e-14);
        let total: f64 = f.coeffs().iter().map(|c| c.norm()).sum();
        assert!((total - 1.0).abs() < 1e-13);
    }

    #[test]
    fn round_trip_and_parseval() {
        let g = GridSpec::new(32, 5.0).unwrap();
        let mut rng = seeded(7);
        let values: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = SpectralField::from_real_values(g, &values).unwrap();
        let back = f.to_real_values();
        let num: f64 = values.iter().zip(&back).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let den: f64 = values.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(num / den < 1e-12);
        let phys = (values.iter().map(|a| a * a).sum::<f64>() * g.cell_area()).sqrt();
        assert!((phys - f.l2_norm()).abs() / phys < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let g = GridSpec::unit(8).unwrap();
        assert!(matches!(
            SpectralField::from_real_values(g, &[0.0; 10]),
            Err(Error::DimensionMismatch { expected: 64, got: 10 })
        ));
    }

    #[test]
    fn multiplier_examples() {
        let g = GridSpec::unit(16).unwrap();
        let f = random_real(g, 3);
        let same = f.apply_multiplier(|_| Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(same.coeffs(), f.coeffs());

        let mode = SpectralField::from_fn(g, |x, _| x.cos());
        let half = mode.lambda_pow(0.5);
        assert!(half.max_rel_diff(&mode) < 1e-14);

        let m4 = SpectralField::from_fn(g, |x, _| (4.0 * x).cos());
        let iota: f64 = 0.05;
        let y = m4.y_weight(iota);
        let factor = 4f64.powf(iota) + 4f64.powf(-iota);
        assert!((y.coeff(4, 0).re / m4.coeff(4, 0).re - factor).abs() < 1e-13);
    }

    #[test]
    fn non_finite_symbol_rejected_except_at_zero() {
        let g = GridSpec::unit(8).unwrap();
        let f = random_real(g, 1);
        let inv = f.apply_multiplier(|k| Complex64::new(1.0 / k[0].hypot(k[1]), 0.0)).unwrap();
        assert_eq!(inv.mean(), Complex64::default());
        let bad = f.apply_multiplier(|k| Complex64::new(1.0 / k[0], 0.0));
        assert!(matches!(bad, Err(Error::NonFiniteSymbol(..))));
    }

    #[test]
    fn mixed_derivatives_commute() {
        let g = GridSpec::unit(16).unwrap();
        let f = random_real(g, 11);
        let a = f.deriv(0).deriv(1);
        let b = f.deriv(1).deriv(0);
        assert!(a.max_rel_diff(&b) < 1e-15);
    }

    proptest::proptest! {
        #[test]
        fn multiplier_composition_is_coefficientwise(p in 0.1f64..2.0, q in -1.5f64..1.5, seed in 0u64..1000) {
            let g = GridSpec::unit(8).unwrap();
            let f = random_real(g, seed);
            let two = f.lambda_pow(p).lambda_pow(q);
            let one = f.apply_radial(|r| r.powf(p) * r.powf(q), true);
            proptest::prop_assert!(two.max_rel_diff(&one) < 1e-14);
        }

        #[test]
        fn real_fields_stay_hermitian(seed in 0u64..1000) {
            let g = GridSpec::unit(8).unwrap();
            let f = random_real(g, seed);
            proptest::prop_assert!(f.is_real());
            proptest::prop_assert!(f.deriv(0).hermitian_defect() < 1e-12);
            proptest::prop_assert!(f.lambda_pow(0.5).hermitian_defect() < 1e-12);
        }
    }
}
