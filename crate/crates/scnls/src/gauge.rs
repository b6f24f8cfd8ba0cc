//! Exact gauge transforms relating equivalent formulations: the moving-frame
//! change of variables along a bicharacteristic, and the Stark gauge that
//! trades a linear potential term for a time-dependent shift and phase.
//!
//! Both are L^2 isometries (a Fourier-phase translation composed with a
//! pointwise unimodular phase), so forward followed by inverse is the
//! identity up to FFT round-off.

use crate::error::{Result, ScnlsError};
use crate::grid::WaveField;
use crate::potential::{bicharacteristic, CanonicalPotential, PhasePoint};
use crate::spectral::{apply_phase, translate};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Moving-frame transform: with `(x(t), xi(t))` the bicharacteristic from
/// `start` and `S(t,x) = x.xi(t) - (x(t).xi(t) - x0.xi0)/2`,
///
/// ```text
/// forward:  w(x) = u(x - x(t)) * exp(i S(t,x)/eps)
/// ```
///
/// Requires a potential without linear term (`b = 0`). A solution of the
/// origin-centered problem becomes, under `forward`, the solution with data
/// concentrated at `(x0, xi0)`.
pub fn moving_frame_transform(
    u: &WaveField,
    p: &CanonicalPotential,
    start: &PhasePoint,
    t: f64,
    direction: Direction,
) -> Result<WaveField> {
    if p.has_stark_term() {
        return Err(ScnlsError::NonzeroStarkTerm);
    }
    if p.dim != u.grid.dim() {
        return Err(ScnlsError::DimensionMismatch {
            expected: u.grid.dim(),
            got: p.dim,
        });
    }
    let flow = bicharacteristic(p, start, t)?;
    let action_const: f64 = 0.5
        * ((0..p.dim).map(|j| flow.x[j] * flow.xi[j]).sum::<f64>()
            - (0..p.dim).map(|j| start.x[j] * start.xi[j]).sum::<f64>());
    let eps = u.eps;
    let xi = flow.xi.clone();
    match direction {
        Direction::Forward => {
            let shifted = translate(u, &flow.x);
            let mut w = apply_phase(&shifted, |x| {
                let s: f64 = (0..x.len()).map(|j| x[j] * xi[j]).sum::<f64>() - action_const;
                s / eps
            });
            w.time_stamp = u.time_stamp;
            Ok(w)
        }
        Direction::Inverse => {
            let unphased = apply_phase(u, |x| {
                let s: f64 = (0..x.len()).map(|j| x[j] * xi[j]).sum::<f64>() - action_const;
                -s / eps
            });
            let neg: Vec<f64> = flow.x.iter().map(|v| -v).collect();
            let mut w = translate(&unphased, &neg);
            w.time_stamp = u.time_stamp;
            Ok(w)
        }
    }
}

/// Stark gauge: `w(x) = u(x - t^2 b / 2) * exp(i (t b.x - t^3 |b|^2 / 3)/eps)`.
///
/// If `u` solves the semiclassical equation with potential `V`, the forward
/// transform solves it with `V - b.x` (same initial data).
pub fn stark_gauge(u: &WaveField, b: &[f64], t: f64, direction: Direction) -> Result<WaveField> {
    if b.len() != u.grid.dim() {
        return Err(ScnlsError::DimensionMismatch {
            expected: u.grid.dim(),
            got: b.len(),
        });
    }
    let eps = u.eps;
    let b2: f64 = b.iter().map(|v| v * v).sum();
    let shift: Vec<f64> = b.iter().map(|v| 0.5 * t * t * v).collect();
    let phase_const = t * t * t * b2 / 3.0;
    let bv = b.to_vec();
    match direction {
        Direction::Forward => {
            let shifted = translate(u, &shift);
            let mut w = apply_phase(&shifted, |x| {
                let lin: f64 = (0..x.len()).map(|j| t * bv[j] * x[j]).sum();
                (lin - phase_const) / eps
            });
            w.time_stamp = u.time_stamp;
            Ok(w)
        }
        Direction::Inverse => {
            let unphased = apply_phase(u, |x| {
                let lin: f64 = (0..x.len()).map(|j| t * bv[j] * x[j]).sum();
                -(lin - phase_const) / eps
            });
            let neg: Vec<f64> = shift.iter().map(|v| -v).collect();
            let mut w = translate(&unphased, &neg);
            w.time_stamp = u.time_stamp;
            Ok(w)
        }
    }
}
