//! Time integration of the capillary water-wave system
//!
//! ```text
//! d_t h   = G(h) psi
//! d_t psi = c kappa - 1/2 |grad psi|^2 + (G(h) psi + grad h . grad psi)^2 / (2 (1 + |grad h|^2))
//! ```
//!
//! through its complex form `u = gamma Lambda^1/2 h + i psi`, `gamma = sqrt(c/2)`,
//! which linearises to `d_t u = -i omega u` with `omega = gamma |k|^3/2`.
//! Stepping is Lawson (integrating-factor) RK4 around the exact linear group.

mod diagnostics;
mod kernel;

pub use diagnostics::{diagnostics, DiagnosticParams, DiagnosticsReport, SupNorm};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dno::{curvature, dno_series, SurfaceState, MAX_SERIES_ORDER};
use crate::spectral::{GridSpec, SpectralField};
use crate::{Error, Result};
use kernel::Kernel;

/// Largest `|z| dt` on the imaginary axis for which classical RK4 is stable.
pub const RK4_IMAGINARY_STABILITY: f64 = 2.828;
/// Allowed correction per step when restoring reality of `(h, psi)`.
pub const SYMMETRY_CORRECTION_LIMIT: f64 = 1e-10;

/// Complex unknown `u = gamma Lambda^1/2 h + i psi` with its time.
#[derive(Clone, Debug)]
pub struct ComplexState {
    pub u: SpectralField,
    pub time: f64,
}

impl ComplexState {
    /// Modes outside the dealiasing mask are dropped.
    pub fn from_surface(state: &SurfaceState, c: f64) -> Self {
        let k = Kernel::new(*state.h.grid(), c, 0);
        let u = k.join(&k.import(state.h.coeffs()), &k.import(state.psi.coeffs()));
        Self { u: SpectralField::from_coeffs(*state.h.grid(), k.export(&u)).expect("grid length"), time: state.time }
    }

    /// Recovers `(h, psi)`; the mean of `h` is zero by construction.
    pub fn to_surface(&self, c: f64) -> SurfaceState {
        let grid = *self.u.grid();
        let k = Kernel::new(grid, c, 0);
        let (h, p) = k.split(&k.import(self.u.coeffs()));
        SurfaceState {
            h: SpectralField::from_coeffs(grid, k.export(&h)).expect("grid length"),
            psi: SpectralField::from_coeffs(grid, k.export(&p)).expect("grid length"),
            time: self.time,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stepper {
    #[default]
    IntegratingFactorRk4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_order")]
    pub dno_order: usize,
    #[serde(default = "default_c")]
    pub c_surface_tension: f64,
    #[serde(default)]
    pub stepper: Stepper,
    #[serde(default)]
    pub diagnostic_params: DiagnosticParams,
    /// Steps between diagnostic samples.
    #[serde(default = "default_sample_every")]
    pub sample_every: usize,
    /// Stop at the box-exit horizon instead of only flagging it.
    #[serde(default = "default_true")]
    pub enforce_horizon: bool,
    /// When false the nonlinearity is dropped and the flow is the linear group.
    #[serde(default = "default_true")]
    pub nonlinear: bool,
}

fn default_order() -> usize {
    2
}
fn default_c() -> f64 {
    2.0
}
fn default_sample_every() -> usize {
    100
}
fn default_true() -> bool {
    true
}

impl EvolutionConfig {
    /// Defaults with `dt = default_dt(grid)`.
    pub fn new(grid: &GridSpec, t_end: f64) -> Self {
        Self {
            dt: default_dt(grid),
            t_end,
            dno_order: default_order(),
            c_surface_tension: default_c(),
            stepper: Stepper::IntegratingFactorRk4,
            diagnostic_params: DiagnosticParams::default(),
            sample_every: default_sample_every(),
            enforce_horizon: true,
            nonlinear: true,
        }
    }

    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end = {} must be nonnegative", self.t_end));
        }
        if self.dno_order > MAX_SERIES_ORDER {
            return Err(Error::OrderCap(self.dno_order, MAX_SERIES_ORDER));
        }
        if !(self.c_surface_tension > 0.0) {
            return bad("c_surface_tension must be positive".into());
        }
        if self.sample_every == 0 {
            return bad("sample_every must be at least 1".into());
        }
        let limit = max_stable_dt(grid, self.c_surface_tension);
        if self.dt > limit {
            return bad(format!("dt = {} exceeds the stability limit {limit:.4e}", self.dt));
        }
        self.diagnostic_params.validate()
    }
}

/// `0.25 (L/n)^3/2`.
pub fn default_dt(grid: &GridSpec) -> f64 {
    0.25 * grid.dx().powf(1.5)
}

/// Largest retained frequency: `omega` at the corner of the dealiased square.
pub fn max_frequency(grid: &GridSpec, c: f64) -> f64 {
    let kmax = std::f64::consts::SQRT_2 * grid.k0() * grid.dealias_cutoff() as f64;
    (0.5 * c).sqrt() * kmax.powf(1.5)
}

/// Half the RK4 imaginary-axis stability bound at the largest retained
/// frequency. The linear part is exact under the integrating factor; the
/// bound guards the frequency content of the nonlinear stages.
pub fn max_stable_dt(grid: &GridSpec, c: f64) -> f64 {
    0.5 * RK4_IMAGINARY_STABILITY / max_frequency(grid, c)
}

/// Time after which the fastest resolved wave packet started at the centre
/// reaches the box edge: `0.5 L / max group speed`.
pub fn horizon(grid: &GridSpec, c: f64) -> f64 {
    let kmax = std::f64::consts::SQRT_2 * grid.k0() * grid.dealias_cutoff() as f64;
    let speed = 1.5 * (0.5 * c).sqrt() * kmax.sqrt();
    0.5 * grid.box_length() / speed
}

/// Right-hand side `(d_t h, d_t psi)` assembled from the public operators.
pub fn rhs(state: &SurfaceState, cfg: &EvolutionConfig) -> Result<(SpectralField, SpectralField)> {
    let grid = *state.h.grid();
    let g = dno_series(&state.h, &state.psi, cfg.dno_order)?;
    let gv = g.to_real_values();
    let hx = state.h.deriv(0).to_real_values();
    let hy = state.h.deriv(1).to_real_values();
    let px = state.psi.deriv(0).to_real_values();
    let py = state.psi.deriv(1).to_real_values();
    let b: Vec<f64> = (0..gv.len())
        .map(|i| {
            let s = hx[i] * hx[i] + hy[i] * hy[i];
            let t = gv[i] + hx[i] * px[i] + hy[i] * py[i];
            -0.5 * (px[i] * px[i] + py[i] * py[i]) + t * t / (2.0 * (1.0 + s))
        })
        .collect();
    let b = SpectralField::from_real_values(grid, &b)?.dealiased();
    let dpsi = &curvature(&state.h).scale(cfg.c_surface_tension) + &b;
    Ok((g, dpsi))
}

/// `exp(-i t |k|^3/2) u`.
pub fn linear_propagate(u: &SpectralField, t: f64) -> SpectralField {
    linear_propagate_with(u, t, 2.0)
}

/// `exp(-i t omega) u` with `omega = sqrt(c/2) |k|^3/2`.
pub fn linear_propagate_with(u: &SpectralField, t: f64, c: f64) -> SpectralField {
    let gamma = (0.5 * c).sqrt();
    let n = u.grid().n();
    let mut out = u.coeffs().to_vec();
    for a in 0..n {
        for b in 0..n {
            let k = u.grid().wavevector(a, b);
            let w = gamma * k[0].hypot(k[1]).powf(1.5);
            out[a * n + b] *= Complex64::from_polar(1.0, -w * t);
        }
    }
    SpectralField::from_coeffs(*u.grid(), out).expect("grid length")
}

/// Profile `f(t) = exp(i t |k|^3/2) u(t)`.
pub fn profile(u: &SpectralField, t: f64) -> SpectralField {
    linear_propagate(u, -t)
}

/// Lawson RK4 integrator on the complex unknown with cached symbols.
#[derive(Clone, Debug)]
pub struct Integrator {
    kernel: Kernel,
    nonlinear: bool,
    cached_dt: f64,
    full: Vec<Complex64>,
    half: Vec<Complex64>,
    stages: Vec<Vec<Complex64>>,
    max_correction: f64,
}

impl Integrator {
    pub fn new(grid: GridSpec, cfg: &EvolutionConfig) -> Self {
        Self {
            kernel: Kernel::new(grid, cfg.c_surface_tension, cfg.dno_order),
            nonlinear: cfg.nonlinear,
            cached_dt: f64::NAN,
            full: Vec::new(),
            half: Vec::new(),
            stages: Vec::new(),
            max_correction: 0.0,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.kernel.grid
    }

    /// Largest relative reality correction applied so far.
    pub fn max_correction(&self) -> f64 {
        self.max_correction
    }

    fn nonlinear_into(&self, u: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        if self.nonlinear {
            self.kernel.nonlinear(u, out)
        } else {
            out.iter_mut().for_each(|z| *z = Complex64::default());
            Ok(())
        }
    }

    /// `d_t u` with the equation substituted, for the dealiased part of `u`.
    pub fn time_derivative(&self, u: &SpectralField) -> Result<SpectralField> {
        let ut = self.kernel.import(u.coeffs());
        let mut du = vec![Complex64::default(); ut.len()];
        self.nonlinear_into(&ut, &mut du)?;
        for ((d, z), w) in du.iter_mut().zip(&ut).zip(&self.kernel.omega) {
            *d += Complex64::new(0.0, -w) * z;
        }
        SpectralField::from_coeffs(*u.grid(), self.kernel.export(&du))
    }

    /// One step of size `dt`; on failure the state is left untouched.
    pub fn step(&mut self, state: &mut ComplexState, dt: f64) -> Result<()> {
        if dt != self.cached_dt {
            self.full = self.kernel.phases(dt);
            self.half = self.kernel.phases(0.5 * dt);
            self.cached_dt = dt;
        }
        let u = self.kernel.import(state.u.coeffs());
        let len = u.len();
        let mut st = std::mem::take(&mut self.stages);
        st.resize_with(5, || vec![Complex64::default(); len]);
        let (e1, e2) = (&self.full, &self.half);
        let out = (|| -> Result<Vec<Complex64>> {
            let [k1, k2, k3, k4, s] = &mut st[..] else { unreachable!() };
            self.nonlinear_into(&u, k1)?;
            for i in 0..len {
                s[i] = e2[i] * (u[i] + k1[i] * (0.5 * dt));
            }
            self.nonlinear_into(s, k2)?;
            for i in 0..len {
                s[i] = e2[i] * u[i] + k2[i] * (0.5 * dt);
            }
            self.nonlinear_into(s, k3)?;
            for i in 0..len {
                s[i] = e1[i] * u[i] + e2[i] * k3[i] * dt;
            }
            self.nonlinear_into(s, k4)?;
            Ok((0..len)
                .map(|i| {
                    e1[i] * (u[i] + k1[i] * (dt / 6.0)) + e2[i] * (k2[i] + k3[i]) * (dt / 3.0) + k4[i] * (dt / 6.0)
                })
                .collect())
        })();
        self.stages = st;
        let next = out?;
        let time = state.time + dt;
        if let Some(i) = next.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::BlowUp { time, reason: format!("non-finite coefficient at index {i}") });
        }
        // project back onto real (h, psi)
        let (h, p) = self.kernel.split(&next);
        let fixed = self.kernel.join(&h, &p);
        let norm = next.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let diff = next.iter().zip(&fixed).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let correction = if norm > 0.0 { diff / norm } else { diff };
        if correction > SYMMETRY_CORRECTION_LIMIT {
            return Err(Error::BlowUp { time, reason: format!("reality correction {correction:.3e}") });
        }
        self.max_correction = self.max_correction.max(correction);
        state.u = SpectralField::from_coeffs(*state.u.grid(), self.kernel.export(&fixed))?;
        state.time = time;
        Ok(())
    }
}

/// One integrating-factor RK4 step of the surface variables.
pub fn step(state: &SurfaceState, cfg: &EvolutionConfig) -> Result<SurfaceState> {
    let mut it = Integrator::new(*state.h.grid(), cfg);
    let mut cs = ComplexState::from_surface(state, cfg.c_surface_tension);
    it.step(&mut cs, cfg.dt)?;
    Ok(cs.to_surface(cfg.c_surface_tension))
}

/// Diagnostics time series of a run.
#[derive(Clone, Debug, Serialize)]
pub struct RunOutput {
    pub samples: Vec<DiagnosticsReport>,
    /// Box-exit time of the fastest resolved wave.
    pub horizon: f64,
    /// Set when the run stopped early at the horizon or sampled past it.
    pub horizon_exceeded: bool,
    /// Largest per-step reality correction.
    pub max_correction: f64,
    /// Reason for an early abort (blow-up, slope guard); the final state is
    /// then the last valid one.
    pub aborted: Option<String>,
    #[serde(skip)]
    pub final_state: SurfaceState,
    pub steps: usize,
}

/// Integrates to `t_end`, sampling diagnostics every `sample_every` steps and
/// at the final time.
pub fn run(initial: &SurfaceState, cfg: &EvolutionConfig) -> Result<RunOutput> {
    run_with(initial, cfg, |_| {})
}

/// [`run`] with a callback on every sample.
pub fn run_with(
    initial: &SurfaceState,
    cfg: &EvolutionConfig,
    mut on_sample: impl FnMut(&DiagnosticsReport),
) -> Result<RunOutput> {
    let grid = *initial.h.grid();
    cfg.validate(&grid)?;
    let c = cfg.c_surface_tension;
    let t_horizon = horizon(&grid, c);
    let mut it = Integrator::new(grid, cfg);
    let mut state = ComplexState::from_surface(initial, c);
    let total = (cfg.t_end / cfg.dt - 1e-9).ceil().max(0.0) as usize;
    let mut samples = Vec::new();
    let mut exceeded = false;
    let mut aborted = None;
    let mut steps = 0;

    let mut sample = |state: &ComplexState, it: &Integrator, samples: &mut Vec<DiagnosticsReport>| -> Result<()> {
        let r = diagnostics(state, it, cfg, t_horizon)?;
        on_sample(&r);
        samples.push(r);
        Ok(())
    };
    sample(&state, &it, &mut samples)?;
    for s in 0..total {
        let dt = if s + 1 == total { cfg.t_end - cfg.dt * s as f64 } else { cfg.dt };
        if state.time + dt > t_horizon * (1.0 + 1e-12) {
            exceeded = true;
            if cfg.enforce_horizon {
                if samples.last().map(|r| r.time) != Some(state.time) {
                    sample(&state, &it, &mut samples)?;
                }
                break;
            }
        }
        if let Err(e) = it.step(&mut state, dt) {
            aborted = Some(e.to_string());
            break;
        }
        steps += 1;
        if (s + 1) % cfg.sample_every == 0 || s + 1 == total {
            sample(&state, &it, &mut samples)?;
        }
    }
    if aborted.is_some() && samples.last().map(|r| r.time) != Some(state.time) {
        sample(&state, &it, &mut samples)?;
    }
    Ok(RunOutput {
        samples,
        horizon: t_horizon,
        horizon_exceeded: exceeded,
        max_correction: it.max_correction(),
        aborted,
        final_state: state.to_surface(c),
        steps,
    })
}

#[cfg(test)]
mod tests;
