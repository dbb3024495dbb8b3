//! Acceptance sweep: one PASS/FAIL line per criterion, with the measured
//! value, its tolerance and the wall time. Exits nonzero if any line fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use capwave::dispersive::{
    beta_family, bessel_j, bessel_j_std, circular_harmonics, envelope_constant, gaussian_transform, hardy_bound_check,
    sup_norm_decay, uniform_nodes, DecayReport, FourierInput, RScan, RadialProfile,
};
use capwave::dno::{dno_oracle_refined, dno_series, max_slope, symmetry_check, DnoConfig, SurfaceState, SymmetryTransform};
use capwave::evolution::{run, ComplexState, EvolutionConfig, Integrator};
use capwave::fit::{linear_fit, loglog_fit};
use capwave::pseudo_product::{cm_bound_probe, CmProbeConfig};
use capwave::resonance::{
    declared_symbols, quadratic_consistency, resonant_sets, symbol_by_name, vanishing_order_fit, Regime, SearchConfig,
    SignPair,
};
use capwave::spectral::lp::plateau;
use capwave::spectral::{bernstein_sweep, gaussian, partition_residual, GridSpec, NormExponent, SpectralField};
use capwave::Complex64;
use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;

type Outcome = Result<(bool, String), String>;

struct Line {
    id: u32,
    name: &'static str,
    budget: Duration,
    check: fn() -> Outcome,
}

fn main() -> ExitCode {
    let lines = [
        Line { id: 1, name: "flat-surface DN exactness", budget: secs(1), check: c1 },
        Line { id: 2, name: "DN series vs elliptic oracle", budget: secs(120), check: c2 },
        Line { id: 3, name: "energy conservation", budget: secs(600), check: c3 },
        Line { id: 4, name: "linear dispersion relation", budget: secs(1), check: c4 },
        Line { id: 5, name: "dispersive decay rates", budget: secs(300), check: c5 },
        Line { id: 6, name: "resonant sets", budget: secs(60), check: c6 },
        Line { id: 7, name: "symbol classes", budget: secs(120), check: c7 },
        Line { id: 8, name: "quadratic form consistency", budget: secs(60), check: c8 },
        Line { id: 9, name: "Coifman-Meyer probe", budget: secs(300), check: c9 },
        Line { id: 10, name: "Littlewood-Paley and Bernstein", budget: secs(10), check: c10 },
        Line { id: 11, name: "Bessel and Hardy", budget: secs(60), check: c11 },
        Line { id: 12, name: "symmetry identities", budget: secs(30), check: c12 },
    ];
    let only: Option<Vec<u32>> =
        std::env::var("ACCEPT_ONLY").ok().map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut failed = 0;
    for l in &lines {
        if only.as_ref().is_some_and(|o| !o.contains(&l.id)) {
            continue;
        }
        let t0 = Instant::now();
        let res = (l.check)();
        let dt = t0.elapsed();
        let in_time = dt <= l.budget;
        let (ok, detail) = match res {
            Ok((ok, d)) => (ok && in_time, d),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} {:<32} {detail} [{:.2}s / {}s{}]",
            if ok { "PASS" } else { "FAIL" },
            l.id,
            l.name,
            dt.as_secs_f64(),
            l.budget.as_secs(),
            if in_time { "" } else { ", over budget" }
        );
    }
    if failed == 0 {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria fail");
        ExitCode::FAILURE
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn c1() -> Outcome {
    let g = GridSpec::unit(64).map_err(err)?;
    let mut r = capwave::rng::seeded(1);
    let vals: Vec<f64> = (0..64 * 64).map(|_| r.gen_range(-1.0..1.0)).collect();
    let rough = SpectralField::from_real_values(g, &vals).map_err(err)?;
    let smooth = gaussian(g, [0.3, -0.1], 0.5, 1.0);
    let zero = SpectralField::zeros(g);
    let mut worst: f64 = 0.0;
    for f in [rough, smooth] {
        let want = f.lambda_pow(1.0);
        for order in 0..=4 {
            let got = dno_series(&zero, &f, order).map_err(err)?;
            for (a, b) in got.coeffs().iter().zip(want.coeffs()) {
                worst = worst.max((a - b).norm());
            }
        }
    }
    Ok((worst <= 1e-12, format!("max coefficient error {worst:.2e} (tol 1e-12)")))
}

fn c2() -> Outcome {
    let g = GridSpec::unit(64).map_err(err)?;
    let mut h0 = gaussian(g, [0.3, -0.2], 0.6, 1.0);
    h0.remove_mean();
    let s0 = max_slope(&h0);
    let f = gaussian(g, [-0.4, 0.3], 0.7, 1.0);
    let mut cfg = DnoConfig { oracle_layers: 64, ..DnoConfig::default() };
    cfg.oracle_depth = cfg.oracle_depth.max(3.0);
    let eps = [0.1, 0.05, 0.025];
    let mut errs = vec![Vec::new(); 2];
    for &e in &eps {
        let h = h0.scale(e / s0);
        let oracle = dno_oracle_refined(&h, &f, &cfg).map_err(err)?;
        for (i, order) in [1, 2].into_iter().enumerate() {
            let s = dno_series(&h, &f, order).map_err(err)?;
            errs[i].push((&s - &oracle).l2_norm() / oracle.l2_norm());
        }
    }
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, order) in [1usize, 2].into_iter().enumerate() {
        let slope = loglog_fit(&eps, &errs[i]).map_err(err)?.slope;
        ok &= (slope - (order + 1) as f64).abs() <= 0.2;
        parts.push(format!("N={order} slope {slope:.3} (target {} +- 0.2)", order + 1));
    }
    Ok((ok, parts.join(", ")))
}

fn surface(g: GridSpec, amp: f64) -> Result<SurfaceState, String> {
    let h = gaussian(g, [0.4, -0.3], 0.9, amp).dealiased();
    let psi = gaussian(g, [-0.5, 0.2], 1.1, 0.7 * amp).dealiased();
    SurfaceState::new(h, psi, 0.0).map_err(err)
}

/// Largest `|E(t) - E(0)| / E(0)` over the samples, and the signed final value.
fn drift(s: &SurfaceState, g: &GridSpec, dt: f64, t_end: f64, order: usize, every: usize) -> Result<(f64, f64), String> {
    let mut c = EvolutionConfig { dt, enforce_horizon: false, dno_order: order, ..EvolutionConfig::new(g, t_end) };
    c.sample_every = every;
    c.diagnostic_params.max_vector_fields = 0;
    let out = run(s, &c).map_err(err)?;
    if let Some(why) = out.aborted {
        return Err(why);
    }
    let e0 = out.samples[0].energy;
    let max = out.samples.iter().map(|d| ((d.energy - e0) / e0).abs()).fold(0.0, f64::max);
    Ok((max, (out.samples.last().unwrap().energy - e0) / e0))
}

fn c3() -> Outcome {
    let g = GridSpec::new(128, 20.0).map_err(err)?;
    let s = surface(g, 1e-3)?;
    let (d1, f1) = drift(&s, &g, 1e-3, 20.0, 2, 1000)?;
    let (d2, f2) = drift(&s, &g, 2e-3, 20.0, 2, 500)?;
    let ratio = d2 / d1;
    // at the truncation floor the two runs agree to well under a percent
    let floor = (f2 - f1).abs() < 0.01 * f1.abs();
    let main = d1 <= 1e-6 && (ratio >= 8.0 || floor);

    // with a larger wave the dt-dependent part is visible above the floor
    let g2 = GridSpec::new(32, 8.0).map_err(err)?;
    let s2 = surface(g2, 0.05)?;
    let mut fin = Vec::new();
    for dt in [0.032, 0.016, 0.008] {
        fin.push(drift(&s2, &g2, dt, 2.0, 4, 1 << 20)?.1);
    }
    let order_ratio = (fin[0] - fin[1]) / (fin[1] - fin[2]);
    Ok((
        main && order_ratio >= 8.0,
        format!(
            "drift {d1:.2e} at dt=1e-3 (tol 1e-6), {d2:.2e} at dt=2e-3, {}; dt-part ratio per halving {order_ratio:.1} (>= 8)",
            if floor { "both at the truncation floor" } else { "above the floor" }
        ),
    ))
}

fn c4() -> Outcome {
    let g = GridSpec::unit(64).map_err(err)?;
    let c = EvolutionConfig { nonlinear: false, enforce_horizon: false, dt: 1e-3, ..EvolutionConfig::new(&g, 1.0) };
    let mut worst: f64 = 0.0;
    for (m1, m2) in [(1, 0), (3, 2), (-5, 7), (12, 9)] {
        let mut it = Integrator::new(g, &c);
        let mut u = SpectralField::zeros(g);
        u.set_coeff(m1, m2, Complex64::new(1.0, 0.0));
        let mut st = ComplexState { u, time: 0.0 };
        let (mut ts, mut ph) = (vec![0.0], vec![0.0]);
        let mut last = 0.0;
        for _ in 0..200 {
            it.step(&mut st, c.dt).map_err(err)?;
            let mut p = st.u.coeff(m1, m2).arg();
            while p > last + PI {
                p -= 2.0 * PI;
            }
            while p < last - PI {
                p += 2.0 * PI;
            }
            last = p;
            ts.push(st.time);
            ph.push(p);
        }
        let slope = -linear_fit(&ts, &ph).map_err(err)?.slope;
        let want = ((m1 * m1 + m2 * m2) as f64).powf(0.75);
        worst = worst.max((slope - want).abs() / want);
    }
    Ok((worst <= 1e-10, format!("max relative frequency error {worst:.2e} over 4 modes (tol 1e-10)")))
}

fn not_monotone(r: &DecayReport) -> bool {
    !r.ratio_monotone_growth
}

fn spread(r: &DecayReport) -> f64 {
    let lo = r.ratios.iter().copied().fold(f64::INFINITY, f64::min);
    r.ratio_max / lo
}

fn c5() -> Outcome {
    let times: Vec<f64> = (0..9).map(|k| 10f64.powf(k as f64 / 4.0)).collect();
    let scan = RScan::default();
    let iota = 0.05;
    let bump = circular_harmonics(&FourierInput::analytic(gaussian_transform(1.0, 1.0)), 0, &uniform_nodes(12.0, 2400))
        .map_err(err)?;
    let b0 = sup_norm_decay(&bump, &times, &scan, 0.0, iota).map_err(err)?;
    let fam = beta_family(1.0, 0.5, iota, 2400).map_err(err)?;
    let b5 = sup_norm_decay(&fam, &times, &scan, 0.5, iota).map_err(err)?;
    let ok0 = (b0.fitted_exponent + 1.0).abs() <= 0.1;
    let ok5 = (b5.fitted_exponent + 2.0 / 3.0).abs() <= 0.1;
    let bounded = [&b0, &b5].iter().all(|r| r.ratio_max.is_finite() && spread(r) < 10.0 && not_monotone(r));
    Ok((
        ok0 && ok5 && bounded,
        format!(
            "beta=0 exponent {:.3} (target -1 +- 0.1), beta=1/2 exponent {:.3} (target -0.667 +- 0.1), ratio spread {:.2}/{:.2}, monotone growth {}/{}",
            b0.fitted_exponent,
            b5.fitted_exponent,
            spread(&b0),
            spread(&b5),
            b0.ratio_monotone_growth,
            b5.ratio_monotone_growth
        ),
    ))
}

fn c6() -> Outcome {
    let cfg = SearchConfig::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for s in [SignPair::PlusPlus, SignPair::PlusMinus, SignPair::MinusMinus] {
        let rep = resonant_sets(s, &cfg);
        ok &= rep.passed();
        for c in &rep.checks {
            if !c.pass {
                parts.push(format!("{s:?} {}: {:.2e} vs {:.0e}", c.name, c.value, c.bound));
            }
        }
        let shown = match s {
            SignPair::PlusPlus => "min |phi| / scale away from origin",
            SignPair::PlusMinus => "max |xi| over numerically resonant points",
            _ => "max |xi - 2 eta| / |eta| over zeros of d_eta phi",
        };
        if let Some(c) = rep.checks.iter().find(|c| c.name == shown) {
            parts.push(format!("{}: {} {:.2e} (bound {:.0e})", s.label(), c.name, c.value, c.bound));
        }
        if s == SignPair::MinusMinus {
            if let Some(c) = rep.checks.iter().find(|c| c.name.starts_with("|phi(2 eta, eta)")) {
                parts.push(format!("--: phi(2eta, eta) defect {:.2e} (bound {:.0e})", c.value, c.bound));
            }
        }
    }
    Ok((ok, parts.join("; ")))
}

fn c7() -> Outcome {
    let mut ok = true;
    let mut worst = f64::INFINITY;
    let mut count = 0;
    let mut misses = Vec::new();
    for s in declared_symbols() {
        let class = s.class.ok_or("declared symbol without class")?;
        let defect = s.homogeneity_defect(200, 5);
        if defect > 1e-10 {
            ok = false;
            misses.push(format!("{} degree {} defect {defect:.1e}", s.name, class.beta));
        }
        for regime in Regime::ALL {
            let fit = vanishing_order_fit(&s, regime, 4).map_err(err)?;
            let margin = fit.slope - fit.declared.unwrap_or(f64::NEG_INFINITY);
            worst = worst.min(margin);
            count += 1;
            if !fit.meets_class() {
                ok = false;
                misses.push(format!("{} {regime:?} slope {:.3}", s.name, fit.slope));
            }
        }
    }
    let mut d = format!("{count} fits, worst slope - declared {worst:.3} (tol -0.1), degrees homogeneous to 1e-10");
    if !misses.is_empty() {
        d.push_str(&format!("; misses: {}", misses.join(", ")));
    }
    Ok((ok, d))
}

fn c8() -> Outcome {
    let g = GridSpec::new(32, 8.0 * PI).map_err(err)?;
    let mut worst: f64 = 0.0;
    for amp in [1e-1, 1e-2, 1e-3] {
        let rep = quadratic_consistency(g, 20, amp, 8).map_err(err)?;
        worst = worst.max(rep.max_normalized);
    }
    Ok((worst <= 1e-8, format!("max residual / amplitude^2 {worst:.2e} over 3 x 20 trials (tol 1e-8)")))
}

fn c9() -> Outcome {
    let g = GridSpec::new(32, 8.0 * PI).map_err(err)?;
    let (two, inf) = (NormExponent::Two, NormExponent::Infinity);
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["m2", "m_pm"] {
        let sym = symbol_by_name(name).map_err(err)?;
        for (p, q, r) in [(two, two, inf), (two, inf, two)] {
            let cfg = CmProbeConfig { j_min: -2, j_max: 1, p, q, r, trials: 64, seed: 0 };
            let rep = cm_bound_probe(&sym, g, &cfg).map_err(err)?;
            ok &= rep.rows.len() >= 4 && rep.trend_slope <= 0.1;
            parts.push(format!("{name} ({},{},{}) {:.3}", rep.p, rep.q, rep.r, rep.trend_slope));
        }
    }
    Ok((ok, format!("trend slopes over 4 levels: {} (tol 0.1)", parts.join(", "))))
}

fn c10() -> Outcome {
    let mut resid: f64 = 0.0;
    for (n, l) in [(64, 2.0 * PI), (128, 8.0 * PI), (512, 20.0 * PI)] {
        resid = resid.max(partition_residual(&GridSpec::new(n, l).map_err(err)?));
    }
    let rep = bernstein_sweep(&GridSpec::new(512, 20.0 * PI).map_err(err)?);
    let ok = resid <= 1e-10 && rep.rows.len() >= 4 && rep.sup_spread <= 2.0 && rep.lambda_spread <= 2.0;
    Ok((
        ok,
        format!(
            "partition residual {resid:.1e} (tol 1e-10), {} levels, sup spread {:.3}, Lambda spread {:.3} (tol 2)",
            rep.rows.len(),
            rep.sup_spread,
            rep.lambda_spread
        ),
    ))
}

/// `J_m(p/q)` from the power series in fixed point with 10^-160 resolution.
fn bessel_oracle(m: u32, p: i64, q: i64) -> f64 {
    let scale = BigInt::from(10).pow(160);
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
    (sum / BigInt::from(10).pow(140)).to_f64().unwrap() * 1e-20
}

fn c11() -> Outcome {
    let mut worst_std: f64 = 0.0;
    let mut worst_norm: f64 = 0.0;
    for m in 0..=20u32 {
        for i in 0..=400i64 {
            let s = i as f64 / 4.0;
            let want = bessel_oracle(m, i, 4);
            worst_std = worst_std.max((bessel_j_std(m, s).map_err(err)? - want).abs());
            worst_norm = worst_norm.max((bessel_j(m as i32, s).map_err(err)?.norm() - 2.0 * PI * want.abs()).abs());
        }
    }
    let c_short = envelope_constant(20, 100.0, 4000).map_err(err)?;
    let c_long = envelope_constant(20, 1000.0, 40000).map_err(err)?;
    let stable = (c_long / c_short - 1.0).abs() <= 1e-2;

    let nodes = || uniform_nodes(40.0, 16000);
    let mut ratios = Vec::new();
    let mut bound = f64::INFINITY;
    for k in 0..10 {
        let a = 0.25 * 32f64.powf(k as f64 / 9.0);
        let p = RadialProfile::from_fn(nodes(), 0.0, move |r| Complex64::new((-a * r).exp(), 0.0)).map_err(err)?;
        let rep = hardy_bound_check(&p, 0.05).map_err(err)?;
        bound = bound.min(rep.universal_bound);
        ratios.push(rep.ratio);
    }
    for k in 0..10 {
        let delta = 0.02 * 100f64.powf(k as f64 / 9.0);
        let p = RadialProfile::from_fn(nodes(), 0.0, move |r| Complex64::new(plateau(r, 1.0, 1.0 + delta), 0.0))
            .map_err(err)?;
        let rep = hardy_bound_check(&p, 0.05).map_err(err)?;
        bound = bound.min(rep.universal_bound);
        ratios.push(rep.ratio);
    }
    let hardy_max = ratios.iter().copied().fold(0.0, f64::max);
    let ok = worst_std <= 1e-10 && worst_norm <= 1e-10 && stable && hardy_max <= bound && ratios.len() == 20;
    Ok((
        ok,
        format!(
            "Bessel error {worst_std:.1e} (2 pi normalised {worst_norm:.1e}, tol 1e-10), envelope C = {c_short:.4} on s <= 100, {c_long:.4} on s <= 1000, Hardy max ratio {hardy_max:.4} <= {bound:.4} over {} profiles",
            ratios.len()
        ),
    ))
}

fn c12() -> Outcome {
    let g = GridSpec::unit(32).map_err(err)?;
    let mut h = &gaussian(g, [0.4, -0.2], 0.6, 0.04) + &gaussian(g, [-0.5, 0.3], 0.5, -0.03);
    h.remove_mean();
    let f = &gaussian(g, [0.1, 0.6], 0.7, 1.0) + &gaussian(g, [-0.2, -0.4], 0.6, 0.5);
    let mut rigid: f64 = 0.0;
    for t in [
        SymmetryTransform::Translation(1, 0),
        SymmetryTransform::Translation(3, -5),
        SymmetryTransform::Rotation(1),
        SymmetryTransform::Rotation(2),
        SymmetryTransform::Rotation(3),
    ] {
        rigid = rigid.max(symmetry_check(&h, &f, 2, t).map_err(err)?);
    }
    let dil = symmetry_check(&h, &f, 2, SymmetryTransform::Dilation(2)).map_err(err)?;
    Ok((
        rigid <= 1e-10 && dil <= 1e-8,
        format!("translation/rotation {rigid:.1e} (tol 1e-10), dilation {dil:.1e} (tol 1e-8)"),
    ))
}
