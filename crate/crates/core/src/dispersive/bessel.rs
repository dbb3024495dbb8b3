//! Integer-order Bessel functions of the first kind.
//!
//! Power series for small arguments, Miller's backward recurrence in the
//! transition zone and the Hankel expansion once `s >= max(30, 2 m^2)`.

use num_complex::Complex64;

use crate::{Error, Result};

/// Orders above this are refused.
pub const MAX_ORDER: u32 = 400;
const SERIES_LIMIT: f64 = 12.0;

/// `int_{S^1} exp(i (s cos t + m t)) dt = 2 pi i^m J_m(s)`.
pub fn bessel_j(m: i32, s: f64) -> Result<Complex64> {
    let v = bessel_j_std(m.unsigned_abs(), s)?;
    let im = match m.unsigned_abs() % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    Ok(im * (2.0 * std::f64::consts::PI * v))
}

/// Standard `J_m(s)` for `m >= 0`, `s >= 0`.
pub fn bessel_j_std(m: u32, s: f64) -> Result<f64> {
    if m > MAX_ORDER {
        return Err(Error::Config(format!("Bessel order {m} exceeds {MAX_ORDER}")));
    }
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::Config(format!("Bessel argument must be finite and >= 0, got {s}")));
    }
    Ok(j_unchecked(m, s))
}

pub(crate) fn j_unchecked(m: u32, s: f64) -> f64 {
    if s == 0.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    if s <= SERIES_LIMIT {
        series(m, s)
    } else if s >= hankel_threshold(m) {
        hankel(m, s)
    } else {
        miller(m, s)
    }
}

fn hankel_threshold(m: u32) -> f64 {
    30f64.max(2.0 * (m as f64).powi(2))
}

pub(crate) fn series(m: u32, s: f64) -> f64 {
    let x = 0.5 * s;
    // (s/2)^m / m!
    let mut term = 1.0;
    for k in 1..=m {
        term *= x / k as f64;
    }
    let x2 = x * x;
    let mut sum = term;
    let mut k = 0u32;
    loop {
        k += 1;
        term *= -x2 / (k as f64 * (k + m) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) || k > 200 {
            break;
        }
    }
    sum
}

pub(crate) fn miller(m: u32, s: f64) -> f64 {
    let top = (m as f64).max(s);
    let mut start = (top + 20.0 + (40.0 * top).sqrt()) as usize;
    start += start % 2;
    let big = 1e250;
    let (mut jp1, mut j) = (0.0f64, 1.0f64);
    let mut sum = 0.0;
    let mut ans = if m as usize == start { j } else { 0.0 };
    for k in (1..=start).rev() {
        let jm1 = (2.0 * k as f64 / s) * j - jp1;
        jp1 = j;
        j = jm1;
        if j.abs() > big {
            j /= big;
            jp1 /= big;
            sum /= big;
            ans /= big;
        }
        let idx = k - 1;
        if idx == m as usize {
            ans = j;
        }
        if idx >= 2 && idx % 2 == 0 {
            sum += j;
        }
    }
    ans / (j + 2.0 * sum)
}

/// Hankel expansion `sqrt(2/(pi s)) (P cos chi - Q sin chi)`.
pub(crate) fn hankel(m: u32, s: f64) -> f64 {
    let mu = 4.0 * (m as f64).powi(2);
    let (p, q) = hankel_pq(mu, s);
    let chi = s - (0.5 * m as f64 + 0.25) * std::f64::consts::PI;
    (2.0 / (std::f64::consts::PI * s)).sqrt() * (p * chi.cos() - q * chi.sin())
}

fn hankel_pq(mu: f64, s: f64) -> (f64, f64) {
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        a *= (mu - odd * odd) / (k as f64 * 8.0 * s);
        if a.abs() > last {
            break;
        }
        last = a.abs();
        // a_k / s^k with sign (-1)^{floor(k/2)}
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * a;
        } else {
            q += sign * a;
        }
        if a.abs() < 1e-17 {
            break;
        }
    }
    (p, q)
}

/// `max_{m <= m_max, s <= s_max} |J_m(s)| <s>^{1/2} / max(1, m)^2` (paper normalisation).
pub fn envelope_constant(m_max: u32, s_max: f64, samples: usize) -> Result<f64> {
    let mut c: f64 = 0.0;
    for m in 0..=m_max {
        for i in 0..=samples {
            let s = s_max * i as f64 / samples as f64;
            let v = bessel_j(m as i32, s)?.norm();
            c = c.max(v * (1.0 + s * s).sqrt().sqrt() / (m.max(1) as f64).powi(2));
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_traits::{One, Signed, ToPrimitive, Zero};

    /// `J_m(p/q)` by the power series in fixed point with 10^-160 resolution.
    fn oracle(m: u32, p: i64, q: i64) -> f64 {
        let scale = BigInt::from(10).pow(160);
        // x = s/2 in fixed point
        let x = BigInt::from(p) * &scale / BigInt::from(2 * q);
        let x2 = &x * &x / &scale;
        let mut term = scale.clone();
        for k in 1..=m {
            term = term * &x / &scale / BigInt::from(k);
        }
        let mut sum = term.clone();
        let mut k: u64 = 0;
        while !term.is_zero() {
            k += 1;
            term = -(term * &x2 / &scale) / BigInt::from(k * (k + m as u64));
            sum += &term;
        }
        let digits = BigInt::from(10).pow(140);
        let reduced = sum / digits;
        reduced.to_f64().unwrap() * 1e-20
    }

    #[test]
    fn matches_high_precision_series() {
        let mut worst: f64 = 0.0;
        for m in 0..=20u32 {
            for i in 1..=400i64 {
                // s = i/4 covers (0, 100]
                let s = i as f64 / 4.0;
                let want = oracle(m, i, 4);
                let got = bessel_j_std(m, s).unwrap();
                worst = worst.max((got - want).abs());
            }
        }
        assert!(worst * 2.0 * std::f64::consts::PI <= 1e-10, "{worst}");
    }

    #[test]
    fn branches_agree_where_they_overlap() {
        for m in [0u32, 1, 3, 7, 12, 20, 40] {
            for s in [35.0, 120.0, 900.0, 3300.0, 1e4] {
                let a = miller(m, s);
                let b = hankel(m, s);
                if s >= hankel_threshold(m) {
                    assert!((a - b).abs() < 1e-12, "m {m} s {s}: {a} {b}");
                }
            }
            assert!((series(m, 10.0) - miller(m, 10.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn normalisation_and_limits() {
        let tau = 2.0 * std::f64::consts::PI;
        assert!((bessel_j(0, 0.0).unwrap() - Complex64::new(tau, 0.0)).norm() < 1e-15);
        assert_eq!(bessel_j(3, 0.0).unwrap().norm(), 0.0);
        // the defining integral by the trapezoidal rule
        for (m, s) in [(0, 1.7), (2, 5.0), (5, 14.0), (-3, 2.5)] {
            let n = 256;
            let mut acc = Complex64::default();
            for k in 0..n {
                let t = tau * k as f64 / n as f64;
                acc += Complex64::from_polar(1.0, s * t.cos() + m as f64 * t);
            }
            acc *= tau / n as f64;
            assert!((acc - bessel_j(m, s).unwrap()).norm() < 1e-12, "{m} {s}");
        }
        assert!(bessel_j_std(MAX_ORDER + 1, 1.0).is_err());
        assert!(bessel_j_std(1, -1.0).is_err());
        assert!(BigInt::one().is_positive());
    }

    #[test]
    fn envelope_is_stable() {
        let a = envelope_constant(10, 100.0, 2000).unwrap();
        let b = envelope_constant(20, 1000.0, 20000).unwrap();
        assert!(a > 0.0 && (b / a) < 1.05, "{a} {b}");
    }
}
