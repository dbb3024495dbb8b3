//! Quadratic symbols, interaction phases and the geometry of resonances.
//!
//! Symbols are functions of `(xi, eta)` where `eta` is the frequency of the
//! first input and `xi - eta` that of the second. Phases are
//! `phi_{t1 t2}(xi, eta) = |xi|^{3/2} + t1 |eta|^{3/2} + t2 |xi - eta|^{3/2}`.

mod order;
mod quadratic;
mod sets;
mod symbols;

pub use order::{vanishing_order_fit, OrderFit, ORDER_FIT_BASES, ORDER_FIT_DIRECTIONS, ORDER_FIT_SLACK};
pub use quadratic::{
    compare as quadratic_compare, complex_variable, quadratic_consistency, quadratic_rhs_direct, quadratic_rhs_symbols,
    quadratic_scaling_sweep, QuadraticReport, QuadraticTrial, ScalingSweep,
};
pub use sets::{
    cutoff_partition, cutoff_scan, resonant_sets, rho, time_cutoff_constant, CutoffReport, ResonanceReport, SearchConfig,
    SetCheck, SetDescriptor, SetKind,
};
pub use symbols::{
    base_symbols, declared_symbols, dot, eta_ibp_div_value, eta_ibp_value, grad_eta_plus_minus_linearization,
    ibp_symbols, m1, m1_swapped, m2, norm, normal_form_value, quadratic_coefficients, quadratic_symbol,
    quadratic_value, sub, symbol_by_name, BilinearSymbol, IbpSymbols, Phase, Regime, SignPair, SymbolClass, SymbolFn,
    Vec2, QUADRATIC_CLASS,
};
