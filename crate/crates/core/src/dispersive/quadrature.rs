//! Globally adaptive Gauss-Kronrod (7, 15) quadrature for complex integrands.

use num_complex::Complex64;
use serde::Serialize;

use crate::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
// Gauss weights at XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-10, max_panels: 20_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
    pub panels: usize,
    pub evaluations: usize,
}

#[derive(Clone, Copy, Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

fn gk15(f: &mut impl FnMut(f64) -> Complex64, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += s * WGK[j];
        if j % 2 == 1 {
            g += s * WG[j / 2];
        }
    }
    Panel { a, b, value: k * h, error: ((k - g) * h).norm() }
}

/// Integrates over the union of `[breaks[i], breaks[i+1]]`; `breaks` must be
/// increasing. Panels are bisected largest-error first.
pub fn integrate(mut f: impl FnMut(f64) -> Complex64, breaks: &[f64], opts: QuadOptions) -> Result<QuadResult> {
    if breaks.len() < 2 || breaks.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("quadrature breakpoints must be strictly increasing".into()));
    }
    let mut panels: Vec<Panel> = breaks.windows(2).map(|w| gk15(&mut f, w[0], w[1])).collect();
    let mut evals = 15 * panels.len();
    loop {
        let value: Complex64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        let tol = opts.abs_tol.max(opts.rel_tol * value.norm());
        if !value.re.is_finite() || !value.im.is_finite() {
            return Err(Error::Quadrature(format!("non-finite integrand on [{}, {}]", breaks[0], breaks[breaks.len() - 1])));
        }
        if error <= tol {
            return Ok(QuadResult { value, error, panels: panels.len(), evaluations: evals });
        }
        if panels.len() >= opts.max_panels {
            let worst = panels.iter().fold(panels[0], |w, p| if p.error > w.error { *p } else { w });
            return Err(Error::Quadrature(format!(
                "{} panels, error {error:.3e} > tol {tol:.3e}; worst panel [{:.6e}, {:.6e}] err {:.3e}",
                panels.len(),
                worst.a,
                worst.b,
                worst.error
            )));
        }
        let (i, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |(bi, be), (i, p)| if p.error > be { (i, p.error) } else { (bi, be) });
        let p = panels.swap_remove(i);
        let m = 0.5 * (p.a + p.b);
        if !(m > p.a && m < p.b) {
            return Err(Error::Quadrature(format!("panel [{:.6e}, {:.6e}] cannot be split further", p.a, p.b)));
        }
        panels.push(gk15(&mut f, p.a, m));
        panels.push(gk15(&mut f, m, p.b));
        evals += 30;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_oscillations() {
        let r = integrate(|x| Complex64::new(x.powi(20), 0.0), &[0.0, 1.0], QuadOptions::default()).unwrap();
        assert!((r.value.re - 1.0 / 21.0).abs() < 1e-14);
        // int_0^10 exp(i 30 x) dx
        let r = integrate(|x| Complex64::from_polar(1.0, 30.0 * x), &[0.0, 10.0], QuadOptions::default()).unwrap();
        let want = (Complex64::from_polar(1.0, 300.0) - 1.0) / Complex64::new(0.0, 30.0);
        assert!((r.value - want).norm() < 1e-11, "{r:?}");
        // endpoint singularity x^-0.4
        let r = integrate(|x| Complex64::new(x.powf(-0.4), 0.0), &[0.0, 1.0], QuadOptions::default()).unwrap();
        assert!((r.value.re - 1.0 / 0.6).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn failures_are_reported() {
        let opts = QuadOptions { max_panels: 4, ..Default::default() };
        let e = integrate(|x| Complex64::from_polar(1.0, 1e4 * x * x), &[0.0, 10.0], opts).unwrap_err();
        assert!(e.to_string().contains("worst panel"));
        assert!(integrate(|_| Complex64::default(), &[1.0, 1.0], QuadOptions::default()).is_err());
    }
}
