use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Square periodic box `[-L/2, L/2)^2` sampled with `n` points per axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
    box_length: f64,
    dealias_fraction: f64,
}

impl GridSpec {
    pub const DEFAULT_DEALIAS: f64 = 2.0 / 3.0;

    pub fn new(n: usize, box_length: f64) -> Result<Self> {
        Self::with_dealias(n, box_length, Self::DEFAULT_DEALIAS)
    }

    pub fn with_dealias(n: usize, box_length: f64, dealias_fraction: f64) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!("n = {n} must be even and >= 8")));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::InvalidGrid(format!("box length {box_length} must be positive")));
        }
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(Error::InvalidGrid(format!(
                "dealias fraction {dealias_fraction} must lie in (0, 1]"
            )));
        }
        Ok(Self { n, box_length, dealias_fraction })
    }

    /// The `2 pi`-box with the default dealiasing fraction.
    pub fn unit(n: usize) -> Result<Self> {
        Self::new(n, 2.0 * PI)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    #[inline]
    pub fn dealias_fraction(&self) -> f64 {
        self.dealias_fraction
    }

    /// Grid spacing `L / n`.
    #[inline]
    pub fn dx(&self) -> f64 {
        self.box_length / self.n as f64
    }

    /// Area element of one cell.
    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dx()
    }

    /// Fundamental wavenumber `2 pi / L`.
    #[inline]
    pub fn k0(&self) -> f64 {
        2.0 * PI / self.box_length
    }

    /// Signed integer wavenumber `m in [-n/2, n/2)` of storage index `i`.
    #[inline]
    pub fn mode(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Storage index of the signed mode `m`, if representable.
    #[inline]
    pub fn index_of(&self, m: i64) -> Option<usize> {
        let n = self.n as i64;
        if m < -n / 2 || m >= n / 2 {
            None
        } else if m >= 0 {
            Some(m as usize)
        } else {
            Some((m + n) as usize)
        }
    }

    /// Wavevector of the coefficient stored at `(a, b)`.
    #[inline]
    pub fn wavevector(&self, a: usize, b: usize) -> [f64; 2] {
        let k0 = self.k0();
        [k0 * self.mode(a) as f64, k0 * self.mode(b) as f64]
    }

    /// Physical coordinate of grid index `j` along either axis (centred box).
    #[inline]
    pub fn coord(&self, j: usize) -> f64 {
        -0.5 * self.box_length + j as f64 * self.dx()
    }

    /// Largest signed mode kept by the dealiasing mask.
    #[inline]
    pub fn dealias_cutoff(&self) -> i64 {
        (self.dealias_fraction * self.n as f64 / 2.0 + 1e-9).floor() as i64
    }

    /// Whether the coefficient at `(a, b)` survives the dealiasing mask.
    #[inline]
    pub fn keeps(&self, a: usize, b: usize) -> bool {
        let c = self.dealias_cutoff();
        self.mode(a).abs() <= c && self.mode(b).abs() <= c && !self.is_nyquist(a, b)
    }

    /// Whether either index is the unpaired Nyquist mode `-n/2`.
    #[inline]
    pub fn is_nyquist(&self, a: usize, b: usize) -> bool {
        a == self.n / 2 || b == self.n / 2
    }

    /// Largest resolved wavenumber magnitude along an axis, `pi n / L`.
    pub fn k_nyquist(&self) -> f64 {
        PI * self.n as f64 / self.box_length
    }

    /// Storage index of the mode `-m` for the coefficient at `(a, b)`.
    #[inline]
    pub fn mirror(&self, a: usize, b: usize) -> (usize, usize) {
        ((self.n - a) % self.n, (self.n - b) % self.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(GridSpec::unit(6).is_err());
        assert!(GridSpec::unit(9).is_err());
        assert!(GridSpec::new(16, -1.0).is_err());
        assert!(GridSpec::with_dealias(16, 1.0, 0.0).is_err());
    }

    #[test]
    fn modes_cover_range_once() {
        let g = GridSpec::unit(16).unwrap();
        let mut seen: Vec<i64> = (0..16).map(|i| g.mode(i)).collect();
        seen.sort();
        assert_eq!(seen, (-8..8).collect::<Vec<_>>());
        assert_eq!(seen.iter().filter(|&&m| m == 0).count(), 1);
        for m in -8..8 {
            assert_eq!(g.mode(g.index_of(m).unwrap()), m);
        }
        assert!(g.index_of(8).is_none());
    }

    #[test]
    fn dealias_cutoff_is_two_thirds() {
        assert_eq!(GridSpec::unit(32).unwrap().dealias_cutoff(), 10);
        assert_eq!(GridSpec::unit(64).unwrap().dealias_cutoff(), 21);
        assert_eq!(GridSpec::unit(128).unwrap().dealias_cutoff(), 42);
    }
}
