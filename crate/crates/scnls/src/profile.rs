//! Reference profiles and semiclassical concentration.
//!
//! `concentrate_profile` builds `eps^(-n/2) phi((x - x0)/eps) exp(i(x.xi0 + kappa)/eps)`
//! on a grid. The scaling is an L^2 isometry from profile space to grid space,
//! which the resolution precondition keeps true discretely.

use num_complex::Complex64;

use crate::error::{Result, ScnlsError};
use crate::grid::{Grid, WaveField, RES_FACTOR};
use crate::spectral::TrigInterpolator;

/// A reference (eps = 1) profile: either a closed-form Gaussian or a sampled
/// field on its own grid.
#[derive(Debug, Clone)]
pub enum Profile {
    /// `amplitude * exp(-|y|^2 / (2 width^2))`
    Gaussian { width: f64, amplitude: f64 },
    Field(WaveField),
}

impl Profile {
    pub fn gaussian(width: f64, amplitude: f64) -> Self {
        Profile::Gaussian { width, amplitude }
    }

    /// L^2 norm of the profile (closed form for Gaussians, grid rule otherwise).
    pub fn l2_norm(&self, dim: usize) -> f64 {
        match self {
            Profile::Gaussian { width, amplitude } => {
                let pi = std::f64::consts::PI;
                amplitude.abs() * (pi * width * width).powf(dim as f64 / 4.0)
            }
            Profile::Field(f) => f.l2_norm(),
        }
    }

    /// Sample the profile onto a unit-scale grid as a WaveField with eps = 1.
    pub fn sample(&self, grid: Grid) -> Result<WaveField> {
        match self {
            Profile::Gaussian { width, amplitude } => {
                let (w, a) = (*width, *amplitude);
                Ok(WaveField::from_fn(grid, 1.0, move |y| {
                    let r2: f64 = y.iter().map(|v| v * v).sum();
                    Complex64::new(a * (-r2 / (2.0 * w * w)).exp(), 0.0)
                }))
            }
            Profile::Field(f) => {
                if f.grid == grid {
                    return Ok(f.clone());
                }
                if grid.dim() != 1 || f.grid.dim() != 1 {
                    return Err(ScnlsError::ParameterDomain(
                        "profile resampling across grids is 1D only".into(),
                    ));
                }
                let interp = TrigInterpolator::new(f);
                let data = (0..grid.total_points())
                    .map(|i| interp.eval(grid.point(0, i)))
                    .collect();
                WaveField::new(grid, 1.0, data)
            }
        }
    }

    fn eval(&self, y: &[f64], interp: Option<&TrigInterpolator>) -> Complex64 {
        match self {
            Profile::Gaussian { width, amplitude } => {
                let r2: f64 = y.iter().map(|v| v * v).sum();
                Complex64::new(amplitude * (-r2 / (2.0 * width * width)).exp(), 0.0)
            }
            Profile::Field(_) => interp.expect("interpolator prepared").eval(y[0]),
        }
    }
}

/// Concentrated, modulated profile on `grid`:
/// `eps^(-n/2) phi((x - x0)/eps) exp(i (x.xi0 + kappa)/eps)`.
///
/// Errors when the grid does not resolve the concentration scale
/// (`dx > eps * RES_FACTOR` on some axis).
pub fn concentrate_profile(
    phi: &Profile,
    eps: f64,
    grid: Grid,
    x0: &[f64],
    xi0: &[f64],
    kappa: f64,
) -> Result<WaveField> {
    if x0.len() != grid.dim() || xi0.len() != grid.dim() {
        return Err(ScnlsError::DimensionMismatch {
            expected: grid.dim(),
            got: x0.len().min(xi0.len()),
        });
    }
    for a in 0..grid.dim() {
        let dx = grid.dx(a);
        let limit = eps * RES_FACTOR;
        if dx > limit * (1.0 + 1e-12) {
            return Err(ScnlsError::UnderResolved { eps, dx, limit });
        }
    }
    let interp = match phi {
        Profile::Field(f) => {
            if f.grid.dim() != 1 || grid.dim() != 1 {
                return Err(ScnlsError::ParameterDomain(
                    "field profiles support 1D concentration only".into(),
                ));
            }
            Some(TrigInterpolator::new(f))
        }
        _ => None,
    };
    let scale = eps.powf(-(grid.dim() as f64) / 2.0);
    let dim = grid.dim();
    let mut data = Vec::with_capacity(grid.total_points());
    let mut y = [0.0f64; crate::grid::MAX_DIM];
    for idx in 0..grid.total_points() {
        let x = grid.position(idx);
        let mut phase = kappa;
        for a in 0..dim {
            y[a] = (x[a] - x0[a]) / eps;
            phase += x[a] * xi0[a];
        }
        let v = phi.eval(&y[..dim], interp.as_ref());
        data.push(v * scale * Complex64::from_polar(1.0, phase / eps));
    }
    WaveField::new(grid, eps, data)
}
