use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{rng, Error, Result};

pub type Vec2 = [f64; 2];

#[inline]
pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
fn axpy(s: f64, a: Vec2, b: Vec2) -> Vec2 {
    [s * a[0] + b[0], s * a[1] + b[1]]
}

#[inline]
fn scale(s: f64, a: Vec2) -> Vec2 {
    [s * a[0], s * a[1]]
}

/// `m1(xi, eta) = |xi|^{1/2} |eta|^{-1/2} (xi.(xi - eta) - |xi||xi - eta|)`, zero at `eta = 0`.
pub fn m1(xi: Vec2, eta: Vec2) -> f64 {
    let e = norm(eta);
    if e == 0.0 {
        return 0.0;
    }
    let d = sub(xi, eta);
    (norm(xi) / e).sqrt() * (dot(xi, d) - norm(xi) * norm(d))
}

/// `m2(xi, eta) = eta.(xi - eta) + |eta||xi - eta|`.
pub fn m2(xi: Vec2, eta: Vec2) -> f64 {
    let d = sub(xi, eta);
    dot(eta, d) + norm(eta) * norm(d)
}

pub fn m1_swapped(xi: Vec2, eta: Vec2) -> f64 {
    m1(xi, sub(xi, eta))
}

/// `(m1, d_eta m1)`; the gradient is zero at the excluded points.
fn m1_with_grad(xi: Vec2, eta: Vec2) -> (f64, Vec2) {
    let e = norm(eta);
    let d = sub(xi, eta);
    let nd = norm(d);
    if e == 0.0 || nd == 0.0 {
        return (m1(xi, eta), [0.0; 2]);
    }
    let sx = norm(xi).sqrt();
    let a = dot(xi, d) - norm(xi) * nd;
    // d_eta a = -xi + |xi| (xi - eta)/|xi - eta|
    let da = axpy(norm(xi) / nd, d, scale(-1.0, xi));
    let w = e.powf(-0.5);
    let dw = scale(-0.5 * e.powf(-2.5), eta);
    (sx * w * a, axpy(sx * a, dw, scale(sx * w, da)))
}

fn m1_swapped_with_grad(xi: Vec2, eta: Vec2) -> (f64, Vec2) {
    let (v, g) = m1_with_grad(xi, sub(xi, eta));
    (v, scale(-1.0, g))
}

fn m2_with_grad(xi: Vec2, eta: Vec2) -> (f64, Vec2) {
    let d = sub(xi, eta);
    let (e, nd) = (norm(eta), norm(d));
    let mut g = axpy(-2.0, eta, xi);
    if e > 0.0 {
        g = axpy(nd / e, eta, g);
    }
    if nd > 0.0 {
        g = axpy(-e / nd, d, g);
    }
    (m2(xi, eta), g)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SignPair {
    #[serde(rename = "++")]
    PlusPlus,
    #[serde(rename = "+-")]
    PlusMinus,
    #[serde(rename = "-+")]
    MinusPlus,
    #[serde(rename = "--")]
    MinusMinus,
}

impl SignPair {
    pub const ALL: [SignPair; 4] = [SignPair::PlusPlus, SignPair::PlusMinus, SignPair::MinusPlus, SignPair::MinusMinus];

    pub fn taus(self) -> (f64, f64) {
        match self {
            SignPair::PlusPlus => (1.0, 1.0),
            SignPair::PlusMinus => (1.0, -1.0),
            SignPair::MinusPlus => (-1.0, 1.0),
            SignPair::MinusMinus => (-1.0, -1.0),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SignPair::PlusPlus => "++",
            SignPair::PlusMinus => "+-",
            SignPair::MinusPlus => "-+",
            SignPair::MinusMinus => "--",
        }
    }

    /// Short ascii tag used in symbol names and file names.
    pub fn tag(self) -> &'static str {
        match self {
            SignPair::PlusPlus => "pp",
            SignPair::PlusMinus => "pm",
            SignPair::MinusPlus => "mp",
            SignPair::MinusMinus => "mm",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "++" | "pp" => Ok(SignPair::PlusPlus),
            "+-" | "pm" => Ok(SignPair::PlusMinus),
            "-+" | "mp" => Ok(SignPair::MinusPlus),
            "--" | "mm" => Ok(SignPair::MinusMinus),
            _ => Err(Error::Config(format!("unknown sign pair {s:?} (use ++, +-, -+, --)"))),
        }
    }

    /// Whether the space-resonant set is `{xi = 0}` (mixed signs) or `{xi = 2 eta}`.
    pub fn mixed(self) -> bool {
        matches!(self, SignPair::PlusMinus | SignPair::MinusPlus)
    }
}

impl fmt::Display for SignPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Interaction phase `|xi|^{3/2} + t1 |eta|^{3/2} + t2 |xi - eta|^{3/2}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Phase {
    pub signs: SignPair,
}

/// `v |v|^{-1/2}`, the gradient of `(2/3)|v|^{3/2}`.
#[inline]
fn g(v: Vec2) -> Vec2 {
    let r = norm(v);
    if r == 0.0 {
        [0.0; 2]
    } else {
        scale(r.powf(-0.5), v)
    }
}

/// Symmetric Jacobian of [`g`].
fn dg(v: Vec2) -> [[f64; 2]; 2] {
    let r = norm(v);
    let a = r.powf(-0.5);
    let b = -0.5 * r.powf(-2.5);
    [[a + b * v[0] * v[0], b * v[0] * v[1]], [b * v[0] * v[1], a + b * v[1] * v[1]]]
}

impl Phase {
    pub fn new(signs: SignPair) -> Self {
        Self { signs }
    }

    pub fn eval(&self, xi: Vec2, eta: Vec2) -> f64 {
        let (t1, t2) = self.signs.taus();
        norm(xi).powf(1.5) + t1 * norm(eta).powf(1.5) + t2 * norm(sub(xi, eta)).powf(1.5)
    }

    /// `d_eta phi = (3/2)(t1 eta/|eta|^{1/2} - t2 (xi - eta)/|xi - eta|^{1/2})`.
    ///
    /// `None` on the rays `eta = 0` and `xi = eta`.
    pub fn grad_eta(&self, xi: Vec2, eta: Vec2) -> Option<Vec2> {
        let d = sub(xi, eta);
        if norm(eta) == 0.0 || norm(d) == 0.0 {
            return None;
        }
        let (t1, t2) = self.signs.taus();
        Some(scale(1.5, axpy(t1, g(eta), scale(-t2, g(d)))))
    }

    /// Jacobian of [`Self::grad_eta`] in `eta`.
    fn hess_eta(&self, xi: Vec2, eta: Vec2) -> [[f64; 2]; 2] {
        let (t1, t2) = self.signs.taus();
        let a = dg(eta);
        let b = dg(sub(xi, eta));
        let mut h = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                h[i][j] = 1.5 * (t1 * a[i][j] + t2 * b[i][j]);
            }
        }
        h
    }

    /// Scale used to normalise `phi` to a degree-0 quantity.
    pub fn scale(&self, xi: Vec2, eta: Vec2) -> f64 {
        norm(xi).powf(1.5) + norm(eta).powf(1.5) + norm(sub(xi, eta)).powf(1.5)
    }

    /// Scale used to normalise `d_eta phi`.
    pub fn grad_scale(&self, xi: Vec2, eta: Vec2) -> f64 {
        norm(eta).sqrt() + norm(sub(xi, eta)).sqrt()
    }
}

/// Homogeneity degree and vanishing exponents of a symbol class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolClass {
    pub beta: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl SymbolClass {
    pub const fn new(beta: f64, c1: f64, c2: f64, c3: f64) -> Self {
        Self { beta, c1, c2, c3 }
    }

    pub fn exponent(&self, regime: Regime) -> f64 {
        match regime {
            Regime::XiSmall => self.c1,
            Regime::EtaSmall => self.c2,
            Regime::DiffSmall => self.c3,
        }
    }
}

/// Which of `xi`, `eta`, `xi - eta` is small.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    XiSmall,
    EtaSmall,
    DiffSmall,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::XiSmall, Regime::EtaSmall, Regime::DiffSmall];

    pub fn label(self) -> &'static str {
        match self {
            Regime::XiSmall => "xi_small",
            Regime::EtaSmall => "eta_small",
            Regime::DiffSmall => "diff_small",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "xi_small" => Ok(Regime::XiSmall),
            "eta_small" => Ok(Regime::EtaSmall),
            "diff_small" => Ok(Regime::DiffSmall),
            _ => Err(Error::Config(format!("unknown regime {s:?} (use xi_small, eta_small, diff_small)"))),
        }
    }
}

pub type SymbolFn = Arc<dyn Fn(Vec2, Vec2) -> Complex64 + Send + Sync>;

/// A named bilinear Fourier symbol `m(xi, eta)`.
///
/// `class` is `None` when only the homogeneity degree is known.
#[derive(Clone)]
pub struct BilinearSymbol {
    pub name: String,
    pub degree: f64,
    pub class: Option<SymbolClass>,
    f: SymbolFn,
}

impl fmt::Debug for BilinearSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BilinearSymbol")
            .field("name", &self.name)
            .field("degree", &self.degree)
            .field("class", &self.class)
            .finish()
    }
}

impl BilinearSymbol {
    pub fn new(
        name: impl Into<String>,
        degree: f64,
        class: Option<SymbolClass>,
        f: impl Fn(Vec2, Vec2) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), degree, class, f: Arc::new(f) }
    }

    pub fn with_class(name: impl Into<String>, class: SymbolClass, f: impl Fn(Vec2, Vec2) -> Complex64 + Send + Sync + 'static) -> Self {
        Self::new(name, class.beta, Some(class), f)
    }

    pub fn real(name: impl Into<String>, class: SymbolClass, f: impl Fn(Vec2, Vec2) -> f64 + Send + Sync + 'static) -> Self {
        Self::with_class(name, class, move |x, y| Complex64::new(f(x, y), 0.0))
    }

    #[inline]
    pub fn eval(&self, xi: Vec2, eta: Vec2) -> Complex64 {
        (self.f)(xi, eta)
    }

    pub fn zero() -> Self {
        Self::new("zero", 0.0, None, |_, _| Complex64::default())
    }

    /// Largest relative defect of `m(l xi, l eta) = l^beta m(xi, eta)` for
    /// `l in {2, 1/2}` at random points away from the singular rays.
    pub fn homogeneity_defect(&self, samples: usize, seed: u64) -> f64 {
        let mut r = rng::seeded(seed);
        let mut worst: f64 = 0.0;
        let mut taken = 0;
        while taken < samples {
            let xi = [r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0)];
            let eta = [r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0)];
            let m = norm(xi).min(norm(eta)).min(norm(sub(xi, eta)));
            if m < 1e-2 {
                continue;
            }
            let base = self.eval(xi, eta);
            if base.norm() < 1e-12 {
                continue;
            }
            taken += 1;
            for l in [2.0, 0.5] {
                let v = self.eval(scale(l, xi), scale(l, eta));
                let want = base * f64::powf(l, self.degree);
                worst = worst.max((v - want).norm() / want.norm());
            }
        }
        worst
    }
}

/// The symbols `m1`, `m2`, `m1(xi, xi - eta)` with their classes.
pub fn base_symbols() -> [BilinearSymbol; 3] {
    [
        BilinearSymbol::real("m1", SymbolClass::new(2.0, 1.5, 1.5, 1.0), m1),
        BilinearSymbol::real("m2", SymbolClass::new(2.0, 2.0, 1.0, 1.0), m2),
        BilinearSymbol::real("m1_swapped", SymbolClass::new(2.0, 1.5, 1.0, 1.5), m1_swapped),
    ]
}

/// Coefficients of `m1(xi, eta)`, `m1(xi, xi - eta)` and `m2(xi, eta)` in the
/// quadratic symbol of each sign pair.
///
/// With `u = Lambda^{1/2} h + i psi` and `w_+ = conj(u)`, `w_- = u`, the
/// quadratic part of the equation is
/// `T_{m--}(u, u) + T_{m++}(conj u, conj u) + T_{m+-}(conj u, u)`,
/// where `T_m(f, g)^(xi) = sum_eta m(xi, eta) f^(eta) g^(xi - eta)`. The label
/// of each symbol is the sign pair of the phase it carries once `u` is
/// written through its profile `exp(i t Lambda^{3/2}) u`. `m-+` is the same
/// term with the inputs swapped.
pub fn quadratic_coefficients(signs: SignPair) -> [Complex64; 3] {
    let i = Complex64::new(0.0, 1.0);
    match signs {
        SignPair::MinusMinus => [-0.25 * i, Complex64::default(), -0.125 * i],
        SignPair::PlusPlus => [0.25 * i, Complex64::default(), -0.125 * i],
        SignPair::PlusMinus => [-0.25 * i, 0.25 * i, 0.25 * i],
        SignPair::MinusPlus => [0.25 * i, -0.25 * i, 0.25 * i],
    }
}

pub const QUADRATIC_CLASS: SymbolClass = SymbolClass::new(2.0, 1.5, 1.0, 1.0);

fn quadratic_with_grad(signs: SignPair, xi: Vec2, eta: Vec2) -> (Complex64, [Complex64; 2]) {
    let c = quadratic_coefficients(signs);
    let parts = [m1_with_grad(xi, eta), m1_swapped_with_grad(xi, eta), m2_with_grad(xi, eta)];
    let mut v = Complex64::default();
    let mut gr = [Complex64::default(); 2];
    for (k, (pv, pg)) in parts.iter().enumerate() {
        v += c[k] * pv;
        gr[0] += c[k] * pg[0];
        gr[1] += c[k] * pg[1];
    }
    (v, gr)
}

pub fn quadratic_value(signs: SignPair, xi: Vec2, eta: Vec2) -> Complex64 {
    let c = quadratic_coefficients(signs);
    c[0] * m1(xi, eta) + c[1] * m1_swapped(xi, eta) + c[2] * m2(xi, eta)
}

/// `m_{t1 t2}` as a bilinear symbol in the class `(2, 3/2, 1, 1)`.
pub fn quadratic_symbol(signs: SignPair) -> BilinearSymbol {
    BilinearSymbol::with_class(format!("m_{}", signs.tag()), QUADRATIC_CLASS, move |x, y| quadratic_value(signs, x, y))
}

/// Symbols produced by a time (normal form) or `eta` integration by parts.
#[derive(Clone, Debug)]
pub struct IbpSymbols {
    pub signs: SignPair,
    /// `m / phi`
    pub normal_form: BilinearSymbol,
    /// Components of `m d_eta phi / |d_eta phi|^2`.
    pub eta_ibp: [BilinearSymbol; 2],
    /// `|m| / |d_eta phi|`, the size of the `eta` integration-by-parts symbol.
    pub eta_ibp_norm: BilinearSymbol,
    /// `d_eta . (m d_eta phi / |d_eta phi|^2)`, by analytic differentiation.
    pub eta_ibp_div: BilinearSymbol,
}

pub fn normal_form_value(signs: SignPair, xi: Vec2, eta: Vec2) -> Complex64 {
    let p = Phase::new(signs).eval(xi, eta);
    if p == 0.0 {
        return Complex64::default();
    }
    quadratic_value(signs, xi, eta) / p
}

/// `m d_eta phi / |d_eta phi|^2`; zero where the gradient vanishes or is undefined.
pub fn eta_ibp_value(signs: SignPair, xi: Vec2, eta: Vec2) -> [Complex64; 2] {
    match Phase::new(signs).grad_eta(xi, eta) {
        Some(v) if dot(v, v) > 0.0 => {
            let m = quadratic_value(signs, xi, eta);
            let s = 1.0 / dot(v, v);
            [m * (v[0] * s), m * (v[1] * s)]
        }
        _ => [Complex64::default(); 2],
    }
}

pub fn eta_ibp_div_value(signs: SignPair, xi: Vec2, eta: Vec2) -> Complex64 {
    let ph = Phase::new(signs);
    let v = match ph.grad_eta(xi, eta) {
        Some(v) if dot(v, v) > 0.0 => v,
        _ => return Complex64::default(),
    };
    let h = ph.hess_eta(xi, eta);
    let (m, gm) = quadratic_with_grad(signs, xi, eta);
    let v2 = dot(v, v);
    let hv = [h[0][0] * v[0] + h[0][1] * v[1], h[1][0] * v[0] + h[1][1] * v[1]];
    let div_w = (h[0][0] + h[1][1]) / v2 - 2.0 * dot(v, hv) / (v2 * v2);
    gm[0] * (v[0] / v2) + gm[1] * (v[1] / v2) + m * div_w
}

pub fn ibp_symbols(signs: SignPair) -> IbpSymbols {
    let tag = signs.tag();
    let nf_class = match signs {
        SignPair::PlusPlus => Some(SymbolClass::new(0.5, 1.5, 1.0, 1.0)),
        _ => None,
    };
    let ibp_class = match signs {
        SignPair::PlusMinus => Some(SymbolClass::new(1.5, 0.5, 1.0, 1.0)),
        _ => None,
    };
    let comp = |k: usize| {
        BilinearSymbol::new(format!("eta_ibp_{tag}_{k}"), 1.5, None, move |x, y| eta_ibp_value(signs, x, y)[k])
    };
    IbpSymbols {
        signs,
        normal_form: BilinearSymbol::new(format!("normal_form_{tag}"), 0.5, nf_class, move |x, y| {
            normal_form_value(signs, x, y)
        }),
        eta_ibp: [comp(0), comp(1)],
        eta_ibp_norm: BilinearSymbol::new(format!("eta_ibp_{tag}"), 1.5, ibp_class, move |x, y| {
            let [a, b] = eta_ibp_value(signs, x, y);
            Complex64::new((a.norm_sqr() + b.norm_sqr()).sqrt(), 0.0)
        }),
        eta_ibp_div: BilinearSymbol::new(format!("eta_ibp_div_{tag}"), 0.5, None, move |x, y| {
            eta_ibp_div_value(signs, x, y)
        }),
    }
}

/// Looks up a symbol by name: `m1`, `m2`, `m1_swapped`, `m_pp`, `m_pm`,
/// `m_mp`, `m_mm`, `normal_form_pp`, `eta_ibp_pm`, `eta_ibp_div_pm`, `zero`.
pub fn symbol_by_name(name: &str) -> Result<BilinearSymbol> {
    for s in base_symbols() {
        if s.name == name {
            return Ok(s);
        }
    }
    if name == "zero" {
        return Ok(BilinearSymbol::zero());
    }
    let signs_of = |rest: &str| SignPair::parse(rest);
    if let Some(rest) = name.strip_prefix("m_") {
        return Ok(quadratic_symbol(signs_of(rest)?));
    }
    if let Some(rest) = name.strip_prefix("normal_form_") {
        return Ok(ibp_symbols(signs_of(rest)?).normal_form);
    }
    if let Some(rest) = name.strip_prefix("eta_ibp_div_") {
        return Ok(ibp_symbols(signs_of(rest)?).eta_ibp_div);
    }
    if let Some(rest) = name.strip_prefix("eta_ibp_") {
        return Ok(ibp_symbols(signs_of(rest)?).eta_ibp_norm);
    }
    Err(Error::Config(format!("unknown symbol {name:?}")))
}

/// The symbols certified against a declared class.
pub fn declared_symbols() -> Vec<BilinearSymbol> {
    let mut v: Vec<BilinearSymbol> = base_symbols().into();
    for s in [SignPair::PlusPlus, SignPair::PlusMinus, SignPair::MinusMinus] {
        v.push(quadratic_symbol(s));
    }
    v.push(ibp_symbols(SignPair::PlusPlus).normal_form);
    v.push(ibp_symbols(SignPair::PlusMinus).eta_ibp_norm);
    v
}

/// First-order expansion of `d_eta phi_{+-}` around `xi = 0`:
/// `(3/2)|eta|^{-1/2} (xi - (1/2)(xi.eta/|eta|) eta/|eta|)`.
pub fn grad_eta_plus_minus_linearization(xi: Vec2, eta: Vec2) -> Vec2 {
    let e = norm(eta);
    let u = scale(1.0 / e, eta);
    scale(1.5 / e.sqrt(), axpy(-0.5 * dot(xi, u), u, xi))
}
