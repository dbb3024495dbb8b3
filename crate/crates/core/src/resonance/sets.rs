use rand::Rng;
use serde::Serialize;

use super::symbols::{norm, sub, Phase, SignPair, Vec2};
use crate::rng;
use crate::spectral::lp::plateau;

/// Search settings; all scans are normalised to `|eta| = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SearchConfig {
    /// `xi` ranges over `[-xi_box, xi_box]^2`.
    pub xi_box: f64,
    pub scan_points: usize,
    pub eta_angles: usize,
    pub starts: usize,
    /// Relative radius around `xi = eta` excluded from gradient evaluations.
    pub singular_exclusion: f64,
    /// Residual below which a point counts as a zero of `phi` or `d_eta phi`.
    pub zero_tol: f64,
    /// Residual `|phi| + |d_eta phi|` (normalised) below which a point is numerically resonant.
    pub resonant_tol: f64,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            xi_box: 3.0,
            scan_points: 61,
            eta_angles: 8,
            starts: 48,
            singular_exclusion: 1e-3,
            zero_tol: 1e-8,
            resonant_tol: 1e-4,
            seed: 7,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SetKind {
    /// `phi = 0`
    Time,
    /// `d_eta phi = 0`
    Space,
    /// both
    SpaceTime,
}

impl SetKind {
    pub fn label(self) -> &'static str {
        match self {
            SetKind::Time => "T",
            SetKind::Space => "S",
            SetKind::SpaceTime => "R",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SetDescriptor {
    pub set: SetKind,
    /// Whether any point met the tolerance.
    pub found: bool,
    pub residual: f64,
    pub argmin_xi: Vec2,
    pub argmin_eta: Vec2,
    pub converged: usize,
    pub candidate: String,
    /// Largest distance (relative to `|eta|`) of a converged point from the candidate.
    pub candidate_distance: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SetCheck {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResonanceReport {
    pub signs: SignPair,
    pub sets: Vec<SetDescriptor>,
    pub checks: Vec<SetCheck>,
}

impl ResonanceReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn set(&self, kind: SetKind) -> &SetDescriptor {
        self.sets.iter().find(|s| s.set == kind).expect("all three sets are reported")
    }
}

fn unpack(x: &[f64; 3]) -> (Vec2, Vec2) {
    ([x[0], x[1]], [x[2].cos(), x[2].sin()])
}

/// Normalised `(|phi|, |d_eta phi|)`, or `None` inside the excluded set.
fn residuals(p: &Phase, cfg: &SearchConfig, xi: Vec2, eta: Vec2) -> Option<(f64, f64)> {
    if norm(sub(xi, eta)) < cfg.singular_exclusion * norm(eta) {
        return None;
    }
    let ph = p.eval(xi, eta) / p.scale(xi, eta);
    let g = norm(p.grad_eta(xi, eta)?) / p.grad_scale(xi, eta);
    Some((ph.abs(), g))
}

fn objective(kind: SetKind, r: (f64, f64)) -> f64 {
    match kind {
        SetKind::Time => r.0 * r.0,
        SetKind::Space => r.1 * r.1,
        SetKind::SpaceTime => r.0 * r.0 + r.1 * r.1,
    }
}

fn residual(kind: SetKind, r: (f64, f64)) -> f64 {
    match kind {
        SetKind::Time => r.0,
        SetKind::Space => r.1,
        SetKind::SpaceTime => r.0 + r.1,
    }
}

fn fd_grad(f: &dyn Fn(&[f64; 3]) -> f64, x: &[f64; 3]) -> [f64; 3] {
    let mut g = [0.0; 3];
    for i in 0..3 {
        let h = 1e-7 * x[i].abs().max(1.0);
        let mut a = *x;
        let mut b = *x;
        a[i] += h;
        b[i] -= h;
        let (fa, fb) = (f(&a), f(&b));
        g[i] = if fa.is_finite() && fb.is_finite() { (fa - fb) / (2.0 * h) } else { 0.0 };
    }
    g
}

/// BFGS with finite-difference gradients and Armijo backtracking.
fn bfgs(f: &dyn Fn(&[f64; 3]) -> f64, x0: [f64; 3], max_iter: usize) -> ([f64; 3], f64) {
    let mut x = x0;
    let mut fx = f(&x);
    let mut g = fd_grad(f, &x);
    let mut h = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for _ in 0..max_iter {
        if !fx.is_finite() || fx < 1e-32 {
            break;
        }
        let mut d = [0.0; 3];
        for i in 0..3 {
            d[i] = -(0..3).map(|j| h[i][j] * g[j]).sum::<f64>();
        }
        let mut slope: f64 = (0..3).map(|i| d[i] * g[i]).sum();
        if slope >= 0.0 {
            h = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
            d = [-g[0], -g[1], -g[2]];
            slope = -(0..3).map(|i| g[i] * g[i]).sum::<f64>();
        }
        if slope == 0.0 {
            break;
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn = [x[0] + t * d[0], x[1] + t * d[1], x[2] + t * d[2]];
            let fnew = f(&xn);
            if fnew.is_finite() && fnew <= fx + 1e-4 * t * slope {
                accepted = Some((xn, fnew));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fnew)) = accepted else { break };
        let gn = fd_grad(f, &xn);
        let s = [xn[0] - x[0], xn[1] - x[1], xn[2] - x[2]];
        let y = [gn[0] - g[0], gn[1] - g[1], gn[2] - g[2]];
        let sy: f64 = (0..3).map(|i| s[i] * y[i]).sum();
        if sy > 1e-300 {
            let rho = 1.0 / sy;
            let mut hy = [0.0; 3];
            for i in 0..3 {
                hy[i] = (0..3).map(|j| h[i][j] * y[j]).sum();
            }
            let yhy: f64 = (0..3).map(|i| y[i] * hy[i]).sum();
            let mut nh = h;
            for i in 0..3 {
                for j in 0..3 {
                    nh[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
            h = nh;
        }
        let done = (fx - fnew).abs() <= 1e-30 && s.iter().all(|v| v.abs() < 1e-15);
        x = xn;
        fx = fnew;
        g = gn;
        if done {
            break;
        }
    }
    (x, fx)
}

struct Sample {
    x: [f64; 3],
    r: (f64, f64),
}

/// Scan plus multi-start quasi-Newton location of `T`, `S` and `R` for one sign pair.
pub fn resonant_sets(signs: SignPair, cfg: &SearchConfig) -> ResonanceReport {
    let p = Phase::new(signs);
    let mut scan = Vec::new();
    let m = cfg.scan_points.max(2);
    for ia in 0..cfg.eta_angles.max(1) {
        let a = 2.0 * std::f64::consts::PI * ia as f64 / cfg.eta_angles.max(1) as f64;
        for i in 0..m {
            for j in 0..m {
                let x = [
                    -cfg.xi_box + 2.0 * cfg.xi_box * i as f64 / (m - 1) as f64,
                    -cfg.xi_box + 2.0 * cfg.xi_box * j as f64 / (m - 1) as f64,
                    a,
                ];
                let (xi, eta) = unpack(&x);
                if let Some(r) = residuals(&p, cfg, xi, eta) {
                    scan.push(Sample { x, r });
                }
            }
        }
    }
    let mut r = rng::seeded(cfg.seed);
    let mut sets = Vec::new();
    let mut endpoints_r = Vec::new();
    let mut endpoints_s = Vec::new();
    for kind in [SetKind::Time, SetKind::Space, SetKind::SpaceTime] {
        let f = |x: &[f64; 3]| {
            let (xi, eta) = unpack(x);
            if xi[0].abs() > 2.0 * cfg.xi_box || xi[1].abs() > 2.0 * cfg.xi_box {
                return f64::INFINITY;
            }
            residuals(&p, cfg, xi, eta).map_or(f64::INFINITY, |r| objective(kind, r))
        };
        let mut order: Vec<usize> = (0..scan.len()).collect();
        // ties broken by scan order, which is lexicographic in (angle, xi1, xi2)
        order.sort_by(|&a, &b| objective(kind, scan[a].r).total_cmp(&objective(kind, scan[b].r)).then(a.cmp(&b)));
        let mut starts: Vec<[f64; 3]> = order.iter().take(cfg.starts / 2).map(|&i| scan[i].x).collect();
        while starts.len() < cfg.starts {
            starts.push([
                r.gen_range(-cfg.xi_box..cfg.xi_box),
                r.gen_range(-cfg.xi_box..cfg.xi_box),
                r.gen_range(0.0..2.0 * std::f64::consts::PI),
            ]);
        }
        let tol = if kind == SetKind::SpaceTime { cfg.resonant_tol } else { cfg.zero_tol };
        let mut best: Option<Sample> = order.first().map(|&i| Sample { x: scan[i].x, r: scan[i].r });
        let mut converged = Vec::new();
        for s in starts {
            let (x, _) = bfgs(&f, s, 300);
            let (xi, eta) = unpack(&x);
            let Some(rr) = residuals(&p, cfg, xi, eta) else { continue };
            if residual(kind, rr) < tol {
                converged.push(x);
            }
            if best.as_ref().map_or(true, |b| residual(kind, rr) < residual(kind, b.r)) {
                best = Some(Sample { x, r: rr });
            }
        }
        let best = best.expect("scan is nonempty");
        let (bxi, beta) = unpack(&best.x);
        let candidate = candidate(signs, kind);
        let distance = match kind {
            SetKind::Space => Some(distance_to_space_set(signs, &converged)),
            SetKind::SpaceTime if signs.mixed() => Some(distance_to_space_set(signs, &converged)),
            _ => None,
        }
        .filter(|_| !converged.is_empty());
        match kind {
            SetKind::Space => endpoints_s = converged.clone(),
            SetKind::SpaceTime => endpoints_r = converged.clone(),
            SetKind::Time => {}
        }
        sets.push(SetDescriptor {
            set: kind,
            found: !converged.is_empty(),
            residual: residual(kind, best.r),
            argmin_xi: bxi,
            argmin_eta: beta,
            converged: converged.len(),
            candidate,
            candidate_distance: distance,
        });
    }
    let mut checks = Vec::new();
    match signs {
        SignPair::PlusPlus => {
            let t = &sets[0];
            checks.push(SetCheck {
                name: "min |phi| / scale away from origin".into(),
                value: t.residual,
                bound: cfg.zero_tol,
                pass: t.residual > cfg.zero_tol,
            });
            let ratio = scan
                .iter()
                .map(|s| {
                    let (xi, eta) = unpack(&s.x);
                    let m = norm(xi).min(norm(eta)).min(norm(sub(xi, eta)));
                    if m == 0.0 {
                        f64::INFINITY
                    } else {
                        p.eval(xi, eta).abs() / (0.5 * m.powf(1.5))
                    }
                })
                .fold(f64::INFINITY, f64::min);
            checks.push(SetCheck {
                name: "min |phi| / (0.5 min(|xi|,|eta|,|xi-eta|)^{3/2})".into(),
                value: ratio,
                bound: 1.0,
                pass: ratio >= 1.0,
            });
        }
        SignPair::PlusMinus | SignPair::MinusPlus => {
            let mut worst: f64 = 0.0;
            let mut count = 0;
            let pts = scan.iter().map(|s| s.x).chain(endpoints_r.iter().copied());
            for x in pts {
                let (xi, eta) = unpack(&x);
                if let Some(rr) = residuals(&p, cfg, xi, eta) {
                    if rr.0 + rr.1 < cfg.resonant_tol {
                        worst = worst.max(norm(xi));
                        count += 1;
                    }
                }
            }
            checks.push(SetCheck {
                name: "resonant points found".into(),
                value: count as f64,
                bound: 1.0,
                pass: count >= 1,
            });
            checks.push(SetCheck {
                name: "max |xi| over numerically resonant points".into(),
                value: worst,
                bound: 1e-3,
                pass: count >= 1 && worst < 1e-3,
            });
        }
        SignPair::MinusMinus => {
            let d = distance_to_space_set(signs, &endpoints_s);
            checks.push(SetCheck {
                name: "zeros of d_eta phi found".into(),
                value: endpoints_s.len() as f64,
                bound: 1.0,
                pass: !endpoints_s.is_empty(),
            });
            checks.push(SetCheck {
                name: "max |xi - 2 eta| / |eta| over zeros of d_eta phi".into(),
                value: d,
                bound: 1e-6,
                pass: !endpoints_s.is_empty() && d <= 1e-6,
            });
            let rres = sets[2].residual;
            checks.push(SetCheck {
                name: "min (|phi| + |d_eta phi|) / scale away from origin".into(),
                value: rres,
                bound: cfg.resonant_tol,
                pass: rres > cfg.resonant_tol,
            });
            let v = p.eval([2.0, 0.0], [1.0, 0.0]);
            let want = 2f64.powf(1.5) - 2.0;
            checks.push(SetCheck {
                name: "|phi(2 eta, eta)/|eta|^{3/2} - (2^{3/2} - 2)|".into(),
                value: (v - want).abs(),
                bound: 1e-10,
                pass: (v - want).abs() <= 1e-10,
            });
        }
    }
    if signs == SignPair::PlusMinus {
        let v = p.eval([0.0, 0.0], [0.6, -0.8]);
        checks.push(SetCheck { name: "|phi(0, eta)|".into(), value: v.abs(), bound: 0.0, pass: v == 0.0 });
    }
    ResonanceReport { signs, sets, checks }
}

fn candidate(signs: SignPair, kind: SetKind) -> String {
    let s = match (signs, kind) {
        (SignPair::PlusPlus, SetKind::Time) => "{(0,0)}",
        (SignPair::MinusMinus, SetKind::Time) => "{|xi|^{3/2} = |eta|^{3/2} + |xi-eta|^{3/2}}",
        (SignPair::PlusMinus, SetKind::Time) => "{|xi-eta|^{3/2} = |xi|^{3/2} + |eta|^{3/2}}",
        (SignPair::MinusPlus, SetKind::Time) => "{|eta|^{3/2} = |xi|^{3/2} + |xi-eta|^{3/2}}",
        (s, SetKind::Space) if s.mixed() => "{xi = 0}",
        (_, SetKind::Space) => "{xi = 2 eta}",
        (s, SetKind::SpaceTime) if s.mixed() => "{xi = 0}",
        (_, SetKind::SpaceTime) => "{(0,0)}",
    };
    s.to_string()
}

fn distance_to_space_set(signs: SignPair, pts: &[[f64; 3]]) -> f64 {
    pts.iter()
        .map(|x| {
            let (xi, eta) = unpack(x);
            if signs.mixed() {
                norm(xi) / norm(eta)
            } else {
                norm(sub(xi, [2.0 * eta[0], 2.0 * eta[1]])) / norm(eta)
            }
        })
        .fold(0.0, f64::max)
}

/// `rho(a)`: 1 for `a <= 1`, 0 for `a >= 2`, smooth in between.
pub fn rho(a: f64) -> f64 {
    plateau(a, 1.0, 2.0)
}

/// `(chi_T, chi_S)` with `chi_T = rho(200 |xi - 2 eta| / |xi|)` and `chi_S = 1 - chi_T`.
pub fn cutoff_partition(xi: Vec2, eta: Vec2) -> (f64, f64) {
    let t = rho(200.0 * norm(sub(xi, [2.0 * eta[0], 2.0 * eta[1]])) / norm(xi));
    (t, 1.0 - t)
}

/// Lower bound for `phi_{--} / |eta|^{3/2}` on the support of `chi_T`.
pub fn time_cutoff_constant() -> f64 {
    (200.0f64 / 101.0).powf(1.5) - 1.0 - (101.0f64 / 99.0).powf(1.5)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CutoffReport {
    pub time_bound: f64,
    /// `min phi_{--} / |eta|^{3/2}` over the scanned support of `chi_T`.
    pub time_min_ratio: f64,
    /// `min |d_eta phi_{--}| / (|xi|^{1/2} + |eta|^{1/2})` over the scanned support of `chi_S`.
    pub space_min_constant: f64,
    /// `max |chi_T + chi_S - 1|`.
    pub partition_defect: f64,
    pub samples: usize,
}

/// Scans both supports at `|eta| = 1`; the ratios are homogeneous of degree 0.
pub fn cutoff_scan(points: usize) -> CutoffReport {
    let p = Phase::new(SignPair::MinusMinus);
    let mut time_min = f64::INFINITY;
    let mut space_min = f64::INFINITY;
    let mut defect: f64 = 0.0;
    let mut samples = 0;
    let two_pi = 2.0 * std::f64::consts::PI;
    for ia in 0..8 {
        let a = two_pi * ia as f64 / 8.0 + 0.3;
        let eta = [a.cos(), a.sin()];
        let two_eta = [2.0 * eta[0], 2.0 * eta[1]];
        let mut visit = |xi: Vec2| {
            if norm(xi) == 0.0 {
                return;
            }
            let (t, s) = cutoff_partition(xi, eta);
            defect = defect.max((t + s - 1.0).abs());
            samples += 1;
            if t > 0.0 {
                time_min = time_min.min(p.eval(xi, eta));
            }
            if s > 0.0 {
                if let Some(g) = p.grad_eta(xi, eta) {
                    space_min = space_min.min(norm(g) / (norm(xi).sqrt() + 1.0));
                }
            }
        };
        // dense polar scan around 2 eta, covering supp chi_T and its edge
        for ir in 0..points {
            let r = 0.05 * (ir as f64 + 0.5) / points as f64;
            for it in 0..points {
                let th = two_pi * it as f64 / points as f64;
                visit([two_eta[0] + r * th.cos(), two_eta[1] + r * th.sin()]);
            }
        }
        // global scan, log-spaced in |xi|
        for ir in 0..points {
            let r = 10f64.powf(-3.0 + 4.0 * ir as f64 / (points - 1) as f64);
            for it in 0..points {
                let th = two_pi * it as f64 / points as f64 + 0.01;
                visit([r * th.cos(), r * th.sin()]);
            }
        }
    }
    CutoffReport {
        time_bound: time_cutoff_constant(),
        time_min_ratio: time_min,
        space_min_constant: space_min,
        partition_defect: defect,
        samples,
    }
}
