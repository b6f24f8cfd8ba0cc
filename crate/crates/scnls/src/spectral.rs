//! FFT plumbing: transforms over grid axes, spectral derivatives, exact
//! Fourier-phase translations, and the norm suite built on them.
//!
//! Normalization is pinned for reproducibility: forward transforms are
//! unnormalized, the inverse divides by `N^n`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::Result;
use crate::grid::{Grid, SigmaTriple, WaveField};

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry((n, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

fn transpose(data: &[Complex64], rows: usize, cols: usize, out: &mut [Complex64]) {
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = data[r * cols + c];
        }
    }
}

/// In-place FFT over every axis of a row-major field (axis 0 outermost).
pub fn fft_all_axes(grid: &Grid, data: &mut [Complex64], inverse: bool) {
    match grid.dim() {
        1 => {
            plan(grid.n(0), inverse).process(data);
        }
        _ => {
            let (n0, n1) = (grid.n(0), grid.n(1));
            // axis 1: rows are contiguous
            let p1 = plan(n1, inverse);
            for row in data.chunks_exact_mut(n1) {
                p1.process(row);
            }
            // axis 0: transpose, transform rows, transpose back
            let mut scratch = vec![Complex64::default(); data.len()];
            transpose(data, n0, n1, &mut scratch);
            let p0 = plan(n0, inverse);
            for row in scratch.chunks_exact_mut(n0) {
                p0.process(row);
            }
            transpose(&scratch, n1, n0, data);
        }
    }
    if inverse {
        let scale = 1.0 / grid.total_points() as f64;
        for z in data.iter_mut() {
            *z *= scale;
        }
    }
}

pub fn to_fourier(u: &WaveField) -> Vec<Complex64> {
    let mut hat = u.data.clone();
    fft_all_axes(&u.grid, &mut hat, false);
    hat
}

pub fn from_fourier(grid: Grid, eps: f64, mut hat: Vec<Complex64>) -> WaveField {
    fft_all_axes(&grid, &mut hat, true);
    WaveField {
        grid,
        eps,
        time_stamp: 0.0,
        data: hat,
    }
}

/// Spectral partial derivative along `axis`. Exact for band-limited fields;
/// the Nyquist mode is zeroed so real fields stay real.
pub fn spectral_derivative(u: &WaveField, axis: usize) -> WaveField {
    let mut hat = to_fourier(u);
    let grid = u.grid;
    for (idx, z) in hat.iter_mut().enumerate() {
        let ij = grid.decode(idx);
        if grid.is_nyquist(axis, ij[axis]) {
            *z = Complex64::new(0.0, 0.0);
        } else {
            let k = grid.wavenumber(axis, ij[axis]);
            *z *= Complex64::new(0.0, k);
        }
    }
    let mut d = from_fourier(grid, u.eps, hat);
    d.time_stamp = u.time_stamp;
    d
}

/// Translate `u` by `shift`: result(x) = u(x - shift). Implemented as the
/// Fourier multiplier `exp(-i k . shift)`, exact for band-limited fields.
pub fn translate(u: &WaveField, shift: &[f64]) -> WaveField {
    let mut hat = to_fourier(u);
    let grid = u.grid;
    for (idx, z) in hat.iter_mut().enumerate() {
        let ij = grid.decode(idx);
        let mut phase = 0.0;
        for a in 0..grid.dim() {
            phase -= grid.wavenumber(a, ij[a]) * shift[a];
        }
        *z *= Complex64::from_polar(1.0, phase);
    }
    let mut t = from_fourier(grid, u.eps, hat);
    t.time_stamp = u.time_stamp;
    t
}

/// Multiply pointwise by `exp(i * phase(x))`.
pub fn apply_phase(u: &WaveField, phase: impl Fn(&[f64]) -> f64) -> WaveField {
    let grid = u.grid;
    let data = u
        .data
        .iter()
        .enumerate()
        .map(|(idx, z)| {
            let x = grid.position(idx);
            z * Complex64::from_polar(1.0, phase(&x[..grid.dim()]))
        })
        .collect();
    WaveField {
        grid,
        eps: u.eps,
        time_stamp: u.time_stamp,
        data,
    }
}

/// Norm suite: Sigma triple plus a list of L^r norms.
///
/// With `scaled` the gradient norm is `||eps grad u||` and the moment norm
/// `||(x/eps) u||`; unscaled versions use weight 1 on both.
pub fn norms(u: &WaveField, r_list: &[f64], scaled: bool) -> (SigmaTriple, Vec<f64>) {
    let (gw, mw) = if scaled {
        (u.eps, 1.0 / u.eps)
    } else {
        (1.0, 1.0)
    };
    let triple = norm_triple(u, gw, mw);
    let lr = r_list.iter().map(|&r| u.lr_norm(r)).collect();
    (triple, lr)
}

/// Sigma-style triple with explicit gradient and moment weights:
/// `(||u||_2, ||gw * grad u||_2, ||mw * x u||_2)`.
pub fn norm_triple(u: &WaveField, grad_weight: f64, moment_weight: f64) -> SigmaTriple {
    let mut grad_sq = 0.0;
    for a in 0..u.grid.dim() {
        let d = spectral_derivative(u, a);
        let n = d.l2_norm() * grad_weight;
        grad_sq += n * n;
    }
    SigmaTriple {
        l2: u.l2_norm(),
        grad: grad_sq.sqrt(),
        moment: u.moment_norm(moment_weight),
    }
}

/// Distance between two fields measured in the weighted triple.
pub fn triple_distance(a: &WaveField, b: &WaveField, grad_weight: f64, moment_weight: f64) -> Result<SigmaTriple> {
    let w = a.diff(b)?;
    Ok(norm_triple(&w, grad_weight, moment_weight))
}

/// Evaluate the trigonometric interpolant of a 1D field at an arbitrary point.
/// Returns zero outside the source domain (the interpolant is periodic there).
pub struct TrigInterpolator {
    half_width: f64,
    n: usize,
    hat: Vec<Complex64>,
}

impl TrigInterpolator {
    pub fn new(u: &WaveField) -> Self {
        assert_eq!(u.grid.dim(), 1, "trig interpolation is 1D");
        TrigInterpolator {
            half_width: u.grid.half_width(0),
            n: u.grid.n(0),
            hat: to_fourier(u),
        }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        if x.abs() >= self.half_width * 0.999 {
            return Complex64::new(0.0, 0.0);
        }
        let n = self.n;
        let dk = std::f64::consts::PI / self.half_width;
        // interpolant phases are relative to the first grid point at -L:
        // u(x) = (1/N) sum_m hat[m] e^{i k_m (x+L)}, modes m = -N/2+1 .. N/2-1
        // by a phase recurrence, Nyquist as a cosine
        let arg = x + self.half_width;
        let step = Complex64::from_polar(1.0, dk * arg);
        let mut acc = self.hat[0];
        let mut fwd = Complex64::new(1.0, 0.0);
        let mut bwd = Complex64::new(1.0, 0.0);
        for m in 1..n / 2 {
            fwd *= step;
            bwd *= step.conj();
            acc += self.hat[m] * fwd + self.hat[n - m] * bwd;
        }
        let knyq = dk * (n / 2) as f64;
        acc += self.hat[n / 2] * (knyq * arg).cos();
        acc / n as f64
    }
}
