use serde::Serialize;

use super::symbols::{BilinearSymbol, Regime, Vec2};
use crate::fit::{loglog_fit, LineFit};
use crate::{Error, Result};

/// Directions of the small variable over which the maximum is taken.
pub const ORDER_FIT_DIRECTIONS: usize = 32;
/// Directions of the large (unit) variable.
pub const ORDER_FIT_BASES: usize = 8;
/// Allowed shortfall of a fitted exponent below the declared one.
pub const ORDER_FIT_SLACK: f64 = 0.1;

#[derive(Clone, Debug, Serialize)]
pub struct OrderFit {
    pub symbol: String,
    pub regime: Regime,
    /// `+inf` when the symbol vanishes identically in the regime.
    pub slope: f64,
    pub r_squared: f64,
    pub n_samples: usize,
    pub declared: Option<f64>,
    /// `(ln eps, ln max |m|)` pairs behind the fit.
    pub points: Vec<(f64, f64)>,
    #[serde(skip)]
    pub line: Option<LineFit>,
}

impl OrderFit {
    /// `slope >= declared - 0.1`; faster vanishing is compliant.
    pub fn meets_class(&self) -> bool {
        self.declared.map_or(true, |c| self.slope >= c - ORDER_FIT_SLACK)
    }
}

fn place(regime: Regime, big: Vec2, small: Vec2) -> (Vec2, Vec2) {
    match regime {
        Regime::XiSmall => (small, big),
        Regime::EtaSmall => (big, small),
        Regime::DiffSmall => (big, [big[0] - small[0], big[1] - small[1]]),
    }
}

/// Log-log slope of `max_directions |m|` against the small parameter over
/// `decades` decades below `0.1`.
pub fn vanishing_order_fit(symbol: &BilinearSymbol, regime: Regime, decades: usize) -> Result<OrderFit> {
    if decades < 3 {
        return Err(Error::Config(format!("order fits need at least 3 decades, got {decades}")));
    }
    let per_decade = 4;
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut all_zero = true;
    for k in 0..=decades * per_decade {
        let eps = 0.1 * 10f64.powf(-(k as f64) / per_decade as f64);
        let mut worst: f64 = 0.0;
        for ib in 0..ORDER_FIT_BASES {
            let b = two_pi * ib as f64 / ORDER_FIT_BASES as f64 + 0.123;
            let big = [b.cos(), b.sin()];
            for id in 0..ORDER_FIT_DIRECTIONS {
                let d = two_pi * id as f64 / ORDER_FIT_DIRECTIONS as f64;
                let (xi, eta) = place(regime, big, [eps * d.cos(), eps * d.sin()]);
                worst = worst.max(symbol.eval(xi, eta).norm());
            }
        }
        if worst > 0.0 {
            all_zero = false;
        }
        xs.push(eps);
        ys.push(worst);
    }
    let declared = symbol.class.map(|c| c.exponent(regime));
    if all_zero {
        return Ok(OrderFit {
            symbol: symbol.name.clone(),
            regime,
            slope: f64::INFINITY,
            r_squared: 1.0,
            n_samples: xs.len(),
            declared,
            points: Vec::new(),
            line: None,
        });
    }
    if ys.iter().any(|&y| y == 0.0) {
        return Err(Error::Regression(format!("{} vanishes at some but not all scales in {}", symbol.name, regime.label())));
    }
    let line = loglog_fit(&xs, &ys)?;
    Ok(OrderFit {
        symbol: symbol.name.clone(),
        regime,
        slope: line.slope,
        r_squared: line.r_squared,
        n_samples: line.n_samples,
        declared,
        points: xs.iter().zip(&ys).map(|(x, y)| (x.ln(), y.ln())).collect(),
        line: Some(line),
    })
}

#[cfg(test)]
mod tests {
    use super::super::symbols::*;
    use super::*;

    #[test]
    fn declared_classes_are_met() {
        for s in declared_symbols() {
            for r in Regime::ALL {
                let f = vanishing_order_fit(&s, r, 3).unwrap();
                assert!(f.meets_class(), "{} {}: slope {} declared {:?}", s.name, r.label(), f.slope, f.declared);
            }
        }
    }

    #[test]
    fn spot_values() {
        let m2 = symbol_by_name("m2").unwrap();
        assert!(vanishing_order_fit(&m2, Regime::XiSmall, 3).unwrap().slope >= 1.9);
        let m1 = symbol_by_name("m1").unwrap();
        assert!(vanishing_order_fit(&m1, Regime::EtaSmall, 3).unwrap().slope >= 1.4);
        let z = vanishing_order_fit(&BilinearSymbol::zero(), Regime::XiSmall, 3).unwrap();
        assert!(z.slope.is_infinite());
        assert!(vanishing_order_fit(&m1, Regime::XiSmall, 2).is_err());
    }
}
