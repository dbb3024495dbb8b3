//! Two-dimensional FFT wrappers carrying the box normalisation.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::GridSpec;

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    transposed: Vec<Complex64>,
}

thread_local! {
    static PLANS: RefCell<HashMap<usize, Plans>> = RefCell::new(HashMap::new());
}

fn with_plans<R>(n: usize, f: impl FnOnce(&mut Plans) -> R) -> R {
    PLANS.with(|cell| {
        let mut map = cell.borrow_mut();
        let plans = map.entry(n).or_insert_with(|| {
            let mut planner = FftPlanner::new();
            let forward = planner.plan_fft_forward(n);
            let inverse = planner.plan_fft_inverse(n);
            let len = forward
                .get_inplace_scratch_len()
                .max(inverse.get_inplace_scratch_len());
            Plans {
                forward,
                inverse,
                scratch: vec![Complex64::default(); len],
                transposed: vec![Complex64::default(); n * n],
            }
        });
        f(plans)
    })
}

/// `dst[j][i] = scale(j) * src[i][(j + shift) % n]` for a square `n x n`
/// array, blocked for cache reuse. `shift` rotates the source columns;
/// `negate_odd` multiplies rows of `dst` with odd index by -1.
fn transpose(n: usize, src: &[Complex64], dst: &mut [Complex64], shift: usize, scale: f64, negate_odd: bool) {
    const B: usize = 8;
    for jb in (0..n).step_by(B) {
        for ib in (0..n).step_by(B) {
            for j in jb..(jb + B).min(n) {
                let s = if negate_odd && j % 2 == 1 { -scale } else { scale };
                let col = (j + shift) % n;
                for i in ib..(ib + B).min(n) {
                    dst[j * n + i] = src[i * n + col] * s;
                }
            }
        }
    }
}

/// Sample values (row-major, first index along `x1`) to box coefficients.
///
/// The phase `(-1)^(a+b)` of the centred origin is realised as a rotation of
/// the samples by `n/2` along `x1` and a sign on odd `b`.
pub fn forward(grid: &GridSpec, values: &mut [Complex64]) {
    let n = grid.n();
    let scale = 1.0 / (n * n) as f64;
    with_plans(n, |p| {
        p.forward.process_with_scratch(values, &mut p.scratch);
        // t[b][j1] = r[(j1 + n/2) % n][b]: rows of `values` are indexed by j1
        transpose_rows_rotated(n, values, &mut p.transposed);
        p.forward.process_with_scratch(&mut p.transposed, &mut p.scratch);
        transpose(n, &p.transposed, values, 0, scale, false);
        negate_odd_columns(n, values);
    });
}

/// Box coefficients to sample values.
pub fn inverse(grid: &GridSpec, coeffs: &mut [Complex64]) {
    let n = grid.n();
    with_plans(n, |p| {
        p.inverse.process_with_scratch(coeffs, &mut p.scratch);
        // multiplying by (-1)^b before the transform rotates its output by n/2
        transpose(n, coeffs, &mut p.transposed, n / 2, 1.0, false);
        p.inverse.process_with_scratch(&mut p.transposed, &mut p.scratch);
        transpose(n, &p.transposed, coeffs, n / 2, 1.0, false);
    });
}

fn transpose_rows_rotated(n: usize, src: &[Complex64], dst: &mut [Complex64]) {
    // dst[b][j1] = src[(j1 + n/2) % n][b]
    const B: usize = 8;
    let h = n / 2;
    for ib in (0..n).step_by(B) {
        for bb in (0..n).step_by(B) {
            for i in ib..(ib + B).min(n) {
                let row = (i + h) % n;
                for b in bb..(bb + B).min(n) {
                    dst[b * n + i] = src[row * n + b];
                }
            }
        }
    }
}

fn negate_odd_columns(n: usize, data: &mut [Complex64]) {
    for row in data.chunks_mut(n) {
        for z in row.iter_mut().skip(1).step_by(2) {
            *z = -*z;
        }
    }
}

/// Inverse transforms of two Hermitian coefficient arrays through a single
/// complex transform; returns the two real sample arrays.
pub fn inverse_real_pair(grid: &GridSpec, a: &[Complex64], b: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    let i = Complex64::new(0.0, 1.0);
    let mut buf: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x + i * y).collect();
    inverse(grid, &mut buf);
    (buf.iter().map(|z| z.re).collect(), buf.iter().map(|z| z.im).collect())
}

/// Forward transforms of two real sample arrays through a single complex
/// transform; returns the two (Hermitian) coefficient arrays.
pub fn forward_real_pair(grid: &GridSpec, x: &[f64], y: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut buf: Vec<Complex64> = x.iter().zip(y).map(|(&p, &q)| Complex64::new(p, q)).collect();
    forward(grid, &mut buf);
    let n = grid.n();
    let mut xa = vec![Complex64::default(); buf.len()];
    let mut ya = vec![Complex64::default(); buf.len()];
    for a in 0..n {
        let ma = if a == 0 { 0 } else { n - a };
        for b in 0..n {
            let mb = if b == 0 { 0 } else { n - b };
            let idx = a * n + b;
            let c = buf[idx];
            let cm = buf[ma * n + mb].conj();
            xa[idx] = 0.5 * (c + cm);
            ya[idx] = Complex64::new(0.0, -0.5) * (c - cm);
        }
    }
    (xa, ya)
}

/// Paired real transforms restricted to dealiased spectra.
///
/// Spectra are stored transposed, index `b * n + a` for the mode
/// `(m(a), m(b))`, so that each 2D transform needs a single transpose. Rows
/// `b` outside the dealiasing mask are neither transformed nor read.
pub struct PrunedFft {
    n: usize,
    rows: Vec<usize>,
    keep: Vec<bool>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    work: Vec<Complex64>,
    work2: Vec<Complex64>,
}

impl std::fmt::Debug for PrunedFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PrunedFft").field("n", &self.n).field("rows", &self.rows.len()).finish()
    }
}

impl Clone for PrunedFft {
    fn clone(&self) -> Self {
        Self {
            n: self.n,
            rows: self.rows.clone(),
            keep: self.keep.clone(),
            forward: Arc::clone(&self.forward),
            inverse: Arc::clone(&self.inverse),
            scratch: self.scratch.clone(),
            work: self.work.clone(),
            work2: self.work2.clone(),
        }
    }
}

impl PrunedFft {
    pub fn new(grid: &GridSpec) -> Self {
        let n = grid.n();
        let rows: Vec<usize> = (0..n).filter(|&b| grid.keeps(0, b)).collect();
        let keep = (0..n).map(|b| grid.keeps(0, b)).collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        Self {
            n,
            rows,
            keep,
            forward,
            inverse,
            scratch: vec![Complex64::default(); len],
            work: vec![Complex64::default(); n * n],
            work2: vec![Complex64::default(); n * n],
        }
    }

    /// Samples of the two real fields with transposed, dealiased spectra `a`, `b`.
    pub fn inverse_pair(&mut self, a: &[Complex64], b: &[Complex64], x: &mut [f64], y: &mut [f64]) {
        let n = self.n;
        let h = n / 2;
        let i = Complex64::new(0.0, 1.0);
        for &r in &self.rows {
            let row = &mut self.work[r * n..(r + 1) * n];
            for (k, z) in row.iter_mut().enumerate() {
                *z = a[r * n + k] + i * b[r * n + k];
            }
            self.inverse.process_with_scratch(row, &mut self.scratch);
        }
        // t[j1][b] = (-1)^b w[b][(j1 + h) % n], zero on dropped rows
        for j1 in 0..n {
            let src = (j1 + h) % n;
            let dst = &mut self.work2[j1 * n..(j1 + 1) * n];
            for (r, z) in dst.iter_mut().enumerate() {
                *z = if self.keep[r] {
                    let v = self.work[r * n + src];
                    if r % 2 == 1 {
                        -v
                    } else {
                        v
                    }
                } else {
                    Complex64::default()
                };
            }
        }
        self.inverse.process_with_scratch(&mut self.work2, &mut self.scratch);
        for (k, z) in self.work2.iter().enumerate() {
            x[k] = z.re;
            y[k] = z.im;
        }
    }

    /// Dealiased transposed spectra of the real samples `x`, `y`.
    pub fn forward_pair(&mut self, x: &[f64], y: &[f64], a: &mut [Complex64], b: &mut [Complex64]) {
        let n = self.n;
        let h = n / 2;
        let scale = 1.0 / (n * n) as f64;
        for (k, z) in self.work.iter_mut().enumerate() {
            *z = Complex64::new(x[k], y[k]);
        }
        self.forward.process_with_scratch(&mut self.work, &mut self.scratch);
        // t[b][j] = (-1)^b scale w[(j + h) % n][b] on kept rows
        for &r in &self.rows {
            let s = if r % 2 == 1 { -scale } else { scale };
            let dst = &mut self.work2[r * n..(r + 1) * n];
            for (j, z) in dst.iter_mut().enumerate() {
                *z = self.work[((j + h) % n) * n + r] * s;
            }
            self.forward.process_with_scratch(dst, &mut self.scratch);
        }
        a.iter_mut().for_each(|z| *z = Complex64::default());
        b.iter_mut().for_each(|z| *z = Complex64::default());
        for &r in &self.rows {
            let mr = (n - r) % n;
            for &c in &self.rows {
                let mc = (n - c) % n;
                let v = self.work2[r * n + c];
                let w = self.work2[mr * n + mc].conj();
                a[r * n + c] = 0.5 * (v + w);
                b[r * n + c] = Complex64::new(0.0, -0.5) * (v - w);
            }
        }
    }
}

/// Natural `a * n + b` layout to the transposed one, or back.
pub fn transpose_layout(n: usize, src: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); n * n];
    transpose(n, src, &mut out, 0, 1.0, false);
    out
}
