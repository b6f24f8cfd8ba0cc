//! Periodic uniform grids (1D/2D) and complex wave fields on them.
//!
//! The domain per axis is `[-L, L)` with `N` points, `dx = 2L/N`. Wavenumbers
//! follow standard FFT ordering with `k_max = pi*N/(2L)`. Norms use the
//! periodic trapezoid rule `dx^n * sum`, which coincides with the Riemann sum.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScnlsError};

pub const MAX_DIM: usize = 2;

/// Grid points per epsilon-width required by `concentrate_profile`:
/// `dx <= eps * RES_FACTOR` means at least four points per concentration scale.
pub const RES_FACTOR: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: [usize; MAX_DIM],
    half_width: [f64; MAX_DIM],
}

impl Grid {
    /// Uniform periodic grid with the same `n` points and half-width `l` on every axis.
    pub fn new(dim: usize, n: usize, l: f64) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(ScnlsError::DimensionMismatch {
                expected: MAX_DIM,
                got: dim,
            });
        }
        if !n.is_power_of_two() {
            return Err(ScnlsError::NotPowerOfTwo(n));
        }
        if !(l > 0.0) {
            return Err(ScnlsError::ParameterDomain(format!(
                "half_width must be positive, got {l}"
            )));
        }
        let mut narr = [1usize; MAX_DIM];
        let mut larr = [1.0f64; MAX_DIM];
        for a in 0..dim {
            narr[a] = n;
            larr[a] = l;
        }
        Ok(Grid {
            dim,
            n: narr,
            half_width: larr,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self, axis: usize) -> usize {
        self.n[axis]
    }

    pub fn half_width(&self, axis: usize) -> f64 {
        self.half_width[axis]
    }

    pub fn dx(&self, axis: usize) -> f64 {
        2.0 * self.half_width[axis] / self.n[axis] as f64
    }

    /// Volume element `dx^n`.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.dx(a)).product()
    }

    pub fn total_points(&self) -> usize {
        self.n.iter().product()
    }

    /// Coordinate of point `i` on `axis`: `x_i = -L + i*dx`.
    pub fn point(&self, axis: usize, i: usize) -> f64 {
        -self.half_width[axis] + i as f64 * self.dx(axis)
    }

    /// Wavenumber of FFT mode `i` on `axis` (standard ordering, Nyquist at -N/2).
    pub fn wavenumber(&self, axis: usize, i: usize) -> f64 {
        let n = self.n[axis];
        let m = if i < n / 2 {
            i as f64
        } else {
            i as f64 - n as f64
        };
        m * std::f64::consts::PI / self.half_width[axis]
    }

    pub fn is_nyquist(&self, axis: usize, i: usize) -> bool {
        i == self.n[axis] / 2
    }

    /// Decode a flat row-major index (axis 0 outermost) into per-axis indices.
    pub fn decode(&self, idx: usize) -> [usize; MAX_DIM] {
        match self.dim {
            1 => [idx, 0],
            _ => [idx / self.n[1], idx % self.n[1]],
        }
    }

    /// Position vector of a flat index.
    pub fn position(&self, idx: usize) -> [f64; MAX_DIM] {
        let ij = self.decode(idx);
        let mut x = [0.0; MAX_DIM];
        for a in 0..self.dim {
            x[a] = self.point(a, ij[a]);
        }
        x
    }
}

/// Complex field on a grid with the semiclassical parameter attached.
#[derive(Debug, Clone)]
pub struct WaveField {
    pub grid: Grid,
    pub eps: f64,
    pub time_stamp: f64,
    pub data: Vec<Complex64>,
}

impl WaveField {
    pub fn new(grid: Grid, eps: f64, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.total_points() {
            return Err(ScnlsError::DimensionMismatch {
                expected: grid.total_points(),
                got: data.len(),
            });
        }
        Ok(WaveField {
            grid,
            eps,
            time_stamp: 0.0,
            data,
        })
    }

    pub fn zeros(grid: Grid, eps: f64) -> Self {
        WaveField {
            grid,
            eps,
            time_stamp: 0.0,
            data: vec![Complex64::new(0.0, 0.0); grid.total_points()],
        }
    }

    /// Sample a scalar function of position onto the grid.
    pub fn from_fn(grid: Grid, eps: f64, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let data = (0..grid.total_points())
            .map(|idx| {
                let x = grid.position(idx);
                f(&x[..grid.dim()])
            })
            .collect();
        WaveField {
            grid,
            eps,
            time_stamp: 0.0,
            data,
        }
    }

    /// Squared L^2 norm by the periodic rule `dx^n * sum |u|^2`.
    pub fn mass(&self) -> f64 {
        self.grid.cell_volume() * self.data.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        self.mass().sqrt()
    }

    pub fn lr_norm(&self, r: f64) -> f64 {
        let s: f64 = self.data.iter().map(|z| z.norm().powf(r)).sum();
        (self.grid.cell_volume() * s).powf(1.0 / r)
    }

    /// L^2 norm of `x_axis * u` (optionally scaled by `weight`).
    pub fn moment_norm_axis(&self, axis: usize, weight: f64) -> f64 {
        let mut s = 0.0;
        for (idx, z) in self.data.iter().enumerate() {
            let ij = self.grid.decode(idx);
            let x = self.grid.point(axis, ij[axis]) * weight;
            s += x * x * z.norm_sqr();
        }
        (self.grid.cell_volume() * s).sqrt()
    }

    /// L^2 norm of `|x| * u` with each coordinate scaled by `weight`.
    pub fn moment_norm(&self, weight: f64) -> f64 {
        let mut s = 0.0;
        for (idx, z) in self.data.iter().enumerate() {
            let x = self.grid.position(idx);
            let r2: f64 = (0..self.grid.dim()).map(|a| (x[a] * weight).powi(2)).sum();
            s += r2 * z.norm_sqr();
        }
        (self.grid.cell_volume() * s).sqrt()
    }

    /// L^2 norm of `|x - center| * u`, coordinates scaled by `weight`.
    pub fn moment_norm_about(&self, center: &[f64], weight: f64) -> f64 {
        let mut s = 0.0;
        for (idx, z) in self.data.iter().enumerate() {
            let x = self.grid.position(idx);
            let r2: f64 = (0..self.grid.dim())
                .map(|a| ((x[a] - center[a]) * weight).powi(2))
                .sum();
            s += r2 * z.norm_sqr();
        }
        (self.grid.cell_volume() * s).sqrt()
    }

    /// First moment of the mass density, one entry per axis.
    pub fn center_of_mass(&self) -> Vec<f64> {
        let mut m0 = 0.0;
        let mut m1 = vec![0.0; self.grid.dim()];
        for (idx, z) in self.data.iter().enumerate() {
            let w = z.norm_sqr();
            let x = self.grid.position(idx);
            m0 += w;
            for a in 0..self.grid.dim() {
                m1[a] += x[a] * w;
            }
        }
        m1.iter().map(|v| v / m0.max(1e-300)).collect()
    }

    /// Fraction of mass within 10% of the domain boundary on any axis.
    pub fn boundary_mass_fraction(&self) -> f64 {
        let total: f64 = self.data.iter().map(|z| z.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let mut shell = 0.0;
        for (idx, z) in self.data.iter().enumerate() {
            let x = self.grid.position(idx);
            let near = (0..self.grid.dim())
                .any(|a| x[a].abs() >= 0.9 * self.grid.half_width(a));
            if near {
                shell += z.norm_sqr();
            }
        }
        shell / total
    }

    pub fn scale(&mut self, c: Complex64) {
        for z in &mut self.data {
            *z *= c;
        }
    }

    /// Pointwise difference `self - other` (grids must match).
    pub fn diff(&self, other: &WaveField) -> Result<WaveField> {
        if self.grid != other.grid {
            return Err(ScnlsError::DimensionMismatch {
                expected: self.grid.total_points(),
                got: other.grid.total_points(),
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        let mut f = WaveField::new(self.grid, self.eps, data)?;
        f.time_stamp = self.time_stamp;
        Ok(f)
    }

    pub fn l2_distance(&self, other: &WaveField) -> f64 {
        let dv = self.grid.cell_volume();
        let s: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        (dv * s).sqrt()
    }
}

/// The three components of the Sigma norm: `||u||_2`, a gradient norm and a
/// moment norm, each with its own scaling (`eps` factors or not).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaTriple {
    pub l2: f64,
    pub grad: f64,
    pub moment: f64,
}

impl SigmaTriple {
    pub fn sum(&self) -> f64 {
        self.l2 + self.grad + self.moment
    }
}
