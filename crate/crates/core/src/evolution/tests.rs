use super::*;
use crate::fit::linear_fit;
use crate::spectral::{gaussian, GridSpec};

fn surface(g: GridSpec, amp: f64) -> SurfaceState {
    let h = gaussian(g, [0.4, -0.3], 0.9, amp).dealiased();
    let psi = gaussian(g, [-0.5, 0.2], 1.1, 0.7 * amp).dealiased();
    SurfaceState::new(h, psi, 0.0).unwrap()
}

fn cfg(g: &GridSpec, dt: f64, t_end: f64) -> EvolutionConfig {
    EvolutionConfig { dt, enforce_horizon: false, ..EvolutionConfig::new(g, t_end) }
}

#[test]
fn rhs_reductions() {
    let g = GridSpec::new(32, 8.0).unwrap();
    let c = cfg(&g, 1e-3, 1.0);
    let psi = gaussian(g, [0.2, 0.1], 0.8, 0.3).dealiased();
    let s = SurfaceState::new(SpectralField::zeros(g), psi.clone(), 0.0).unwrap();
    let (dh, dp) = rhs(&s, &c).unwrap();
    assert!(dh.max_rel_diff(&psi.lambda_pow(1.0)) < 1e-13);
    let lp = psi.lambda_pow(1.0).to_real_values();
    let px = psi.deriv(0).to_real_values();
    let py = psi.deriv(1).to_real_values();
    let v: Vec<f64> = (0..lp.len()).map(|i| -0.5 * (px[i] * px[i] + py[i] * py[i]) + 0.5 * lp[i] * lp[i]).collect();
    let expected = SpectralField::from_real_values(g, &v).unwrap().dealiased();
    assert!(dp.max_rel_diff(&expected) < 1e-13);

    let h = gaussian(g, [0.2, 0.1], 0.8, 0.1).dealiased();
    let s = SurfaceState::new(h.clone(), SpectralField::zeros(g), 0.0).unwrap();
    let (dh, dp) = rhs(&s, &c).unwrap();
    assert_eq!(dh.l2_norm(), 0.0);
    assert!(dp.max_rel_diff(&curvature(&h).scale(2.0)) < 1e-14);
}

#[test]
fn fused_kernel_matches_reference_rhs() {
    let g = GridSpec::new(32, 8.0).unwrap();
    for order in 0..=4 {
        let c = EvolutionConfig { dno_order: order, ..cfg(&g, 1e-3, 1.0) };
        let s = surface(g, 0.15);
        let (dh, dp) = rhs(&s, &c).unwrap();
        let it = Integrator::new(g, &c);
        let cs = ComplexState::from_surface(&s, 2.0);
        let du = it.time_derivative(&cs.u).unwrap();
        let expected = ComplexState::from_surface(&SurfaceState { h: dh, psi: dp, time: 0.0 }, 2.0).u;
        assert!(du.max_rel_diff(&expected) < 1e-12, "order {order}: {}", du.max_rel_diff(&expected));
    }
}

#[test]
fn complex_form_round_trip() {
    let g = GridSpec::new(32, 8.0).unwrap();
    let s = surface(g, 0.2);
    for c in [2.0, 0.5] {
        let back = ComplexState::from_surface(&s, c).to_surface(c);
        assert!(back.h.max_rel_diff(&s.h) < 1e-14);
        assert!(back.psi.max_rel_diff(&s.psi) < 1e-14);
    }
}

#[test]
fn propagator_identity_unitarity_group() {
    let g = GridSpec::new(32, 8.0).unwrap();
    let u = ComplexState::from_surface(&surface(g, 1.0), 2.0).u;
    assert_eq!(linear_propagate(&u, 0.0), u);
    let v = linear_propagate(&u, 3.7);
    assert!((v.l2_norm() - u.l2_norm()).abs() <= 1e-13 * u.l2_norm());
    let a = linear_propagate(&linear_propagate(&u, 0.6), 1.3);
    let b = linear_propagate(&u, 1.9);
    assert!(a.max_rel_diff(&b) < 1e-12);
    assert!(profile(&u, 0.0).max_rel_diff(&u) == 0.0);
    for t in [0.5, 2.0] {
        assert!(profile(&linear_propagate(&u, t), t).max_rel_diff(&u) < 1e-12);
    }
}

#[test]
fn single_mode_frequency() {
    let g = GridSpec::new(32, 2.0 * std::f64::consts::PI).unwrap();
    let c = EvolutionConfig { nonlinear: false, ..cfg(&g, 1e-3, 1.0) };
    let mut it = Integrator::new(g, &c);
    let mut u = SpectralField::zeros(g);
    u.set_coeff(3, 2, Complex64::new(1.0, 0.0));
    let mut st = ComplexState { u, time: 0.0 };
    let (mut ts, mut ph) = (vec![0.0], vec![0.0]);
    let mut last = 0.0;
    for _ in 0..200 {
        it.step(&mut st, c.dt).unwrap();
        let z = st.u.coeff(3, 2);
        let mut p = z.arg();
        while p > last + std::f64::consts::PI {
            p -= 2.0 * std::f64::consts::PI;
        }
        while p < last - std::f64::consts::PI {
            p += 2.0 * std::f64::consts::PI;
        }
        last = p;
        ts.push(st.time);
        ph.push(p);
    }
    let fit = linear_fit(&ts, &ph).unwrap();
    let expected = 13f64.powf(0.75);
    assert!((-fit.slope - expected).abs() / expected < 1e-10, "{}", fit.slope);
}

#[test]
fn zero_state_and_linear_exactness() {
    let g = GridSpec::new(32, 8.0).unwrap();
    let c = cfg(&g, 2e-3, 1.0);
    let z = step(&SurfaceState::zeros(g), &c).unwrap();
    assert_eq!(z.h.l2_norm() + z.psi.l2_norm(), 0.0);

    let lin = EvolutionConfig { nonlinear: false, ..c.clone() };
    let s = surface(g, 1.0);
    let mut it = Integrator::new(g, &lin);
    let mut st = ComplexState::from_surface(&s, 2.0);
    let u0 = st.u.clone();
    for _ in 0..50 {
        it.step(&mut st, lin.dt).unwrap();
    }
    assert!(st.u.max_rel_diff(&linear_propagate(&u0, st.time)) < 1e-12);
}

fn integrate(s: &SurfaceState, c: &EvolutionConfig, steps: usize) -> SpectralField {
    let mut it = Integrator::new(*s.h.grid(), c);
    let mut st = ComplexState::from_surface(s, c.c_surface_tension);
    for _ in 0..steps {
        it.step(&mut st, c.dt).unwrap();
    }
    assert!(it.max_correction() <= SYMMETRY_CORRECTION_LIMIT);
    st.u
}

#[test]
fn step_halving_is_fourth_order() {
    let g = GridSpec::new(32, 8.0).unwrap();
    let s = surface(g, 0.25);
    let t = 0.4;
    let runs: Vec<SpectralField> = [0.02, 0.01, 0.005]
        .iter()
        .map(|&dt| integrate(&s, &cfg(&g, dt, t), (t / dt).round() as usize))
        .collect();
    let e1 = (&runs[0] - &runs[1]).l2_norm();
    let e2 = (&runs[1] - &runs[2]).l2_norm();
    let ratio = e1 / e2;
    assert!((ratio - 16.0).abs() < 2.0, "ratio {ratio}");
}

#[test]
fn profile_drift_is_quadratic() {
    let g = GridSpec::new(32, 8.0).unwrap();
    let (dt, steps) = (0.01, 20);
    let mut amps = Vec::new();
    let mut drifts = Vec::new();
    for amp in [0.02, 0.01, 0.005, 0.0025] {
        let s = surface(g, amp);
        let u0 = ComplexState::from_surface(&s, 2.0).u;
        let u1 = integrate(&s, &cfg(&g, dt, 1.0), steps);
        let d = (&profile(&u1, dt * steps as f64) - &u0).l2_norm();
        amps.push(u0.l2_norm());
        drifts.push(d);
    }
    let fit = crate::fit::loglog_fit(&amps, &drifts).unwrap();
    assert!((fit.slope - 2.0).abs() < 0.1, "slope {}", fit.slope);
}

#[test]
fn run_zero_and_linear() {
    let g = GridSpec::new(32, 8.0).unwrap();
    let mut c = cfg(&g, 5e-3, 0.5);
    c.sample_every = 25;
    let out = run(&SurfaceState::zeros(g), &c).unwrap();
    assert_eq!(out.samples.len(), 5);
    for r in &out.samples {
        assert_eq!(r.energy, 0.0);
        assert!(r.hs_norms.iter().all(|x| x.1 == 0.0));
        assert!(r.energy_norm_terms.iter().all(|&x| x == 0.0));
        assert!(r.sup_norms.iter().all(|x| x.value == 0.0));
    }

    c.nonlinear = false;
    c.diagnostic_params.max_vector_fields = 0;
    let out = run(&surface(g, 0.1), &c).unwrap();
    let e0 = out.samples[0].hs_norms[1].1;
    for r in &out.samples {
        assert!((r.hs_norms[1].1 - e0).abs() <= 1e-8 * e0);
        assert!((r.energy_norm_terms[0] * (1.0 + r.time * r.time).sqrt().powf(c.diagnostic_params.delta)
            - out.samples[0].energy_norm_terms[0])
            .abs()
            <= 1e-8 * out.samples[0].energy_norm_terms[0]);
    }
}

#[test]
fn linear_trajectory_keeps_energy() {
    let g = GridSpec::new(32, 8.0).unwrap();
    let mut c = cfg(&g, 0.01, 10.0);
    c.nonlinear = false;
    c.dno_order = 0;
    c.sample_every = 100;
    c.diagnostic_params.max_vector_fields = 0;
    let out = run(&surface(g, 1e-5), &c).unwrap();
    let e0 = out.samples[0].energy;
    for r in &out.samples {
        assert!((r.energy - e0).abs() <= 1e-8 * e0, "{} vs {e0}", r.energy);
    }
}

#[test]
fn horizon_and_config_checks() {
    let g = GridSpec::new(32, 8.0).unwrap();
    let mut c = EvolutionConfig::new(&g, 100.0);
    let out = run(&surface(g, 0.01), &c).unwrap();
    assert!(out.horizon_exceeded);
    assert!(out.samples.last().unwrap().time <= out.horizon);
    c.dt = 1.0;
    assert!(matches!(run(&surface(g, 0.01), &c), Err(Error::Config(_))));
    c.dt = 1e-3;
    c.diagnostic_params.delta_prime = 0.2;
    assert!(matches!(c.validate(&g), Err(Error::Config(_))));
    let j: EvolutionConfig = serde_json::from_str(r#"{"dt": 0.001, "t_end": 1.0, "stepper": "integrating_factor_rk4"}"#).unwrap();
    assert_eq!(j.dno_order, 2);
    assert_eq!(j.diagnostic_params.k, 2);
}

#[test]
fn weighted_norms_use_scaling_field() {
    let g = GridSpec::new(64, 16.0).unwrap();
    let mut c = cfg(&g, 5e-3, 0.05);
    c.diagnostic_params.max_vector_fields = 2;
    c.sample_every = 10;
    let out = run(&surface(g, 0.05), &c).unwrap();
    let r = out.samples.last().unwrap();
    assert_eq!(r.energy_norm_terms.len(), 3);
    assert!(r.scaling_truncated);
    assert!(r.energy_norm_terms.iter().all(|x| x.is_finite() && *x > 0.0));
    assert!(r.margin_warning.is_none());
}

#[test]
fn guard_and_blow_up_are_reported() {
    let g = GridSpec::new(32, 8.0).unwrap();
    let mut c = cfg(&g, 0.01, 0.5);
    c.diagnostic_params.max_vector_fields = 0;
    let h = gaussian(g, [0.0, 0.0], 0.4, 0.5).dealiased();
    let s = SurfaceState::new(h, SpectralField::zeros(g), 0.0).unwrap();
    assert!(matches!(run(&s, &c), Err(Error::SlopeGuard(..))));

    let mut it = Integrator::new(g, &c);
    let mut st = ComplexState::from_surface(&surface(g, 0.01), 2.0);
    let mut bad = st.u.coeffs().to_vec();
    bad[5] = Complex64::new(f64::NAN, 0.0);
    let before = SpectralField::from_coeffs(g, bad).unwrap();
    st.u = before.clone();
    assert!(matches!(it.step(&mut st, 0.01), Err(Error::BlowUp { .. })));
    assert_eq!(st.time, 0.0);
}

#[test]
fn energy_drift_splits_into_floor_and_fourth_order_part() {
    // the truncated energy is not exactly conserved by the truncated flow;
    // the dt-dependent part of the drift shrinks 16x per halving
    let g = GridSpec::new(32, 8.0).unwrap();
    let s = surface(g, 0.05);
    let drifts: Vec<f64> = [0.032, 0.016, 0.008]
        .iter()
        .map(|&dt| {
            let mut c = cfg(&g, dt, 2.0);
            c.dno_order = 4;
            c.sample_every = 1 << 20;
            c.diagnostic_params.max_vector_fields = 0;
            let out = run(&s, &c).unwrap();
            let e0 = out.samples[0].energy;
            (out.samples.last().unwrap().energy - e0) / e0
        })
        .collect();
    let ratio = (drifts[0] - drifts[1]) / (drifts[1] - drifts[2]);
    assert!((ratio - 16.0).abs() < 2.0, "{drifts:?} ratio {ratio}");
}
