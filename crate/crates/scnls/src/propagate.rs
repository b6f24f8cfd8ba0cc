//! Time evolution by Strang splitting.
//!
//! One step over `dt` is: half-step of the exact potential+nonlinearity phase
//! flow (the modulus is invariant under that sub-flow, so the pointwise
//! multiplier `exp(-i dt/(2 eps) [V + nu |u|^(2 sigma)])` with `|u|` frozen at
//! substep start is exact, not approximate), a full kinetic step in Fourier
//! space (`exp(-i dt eps |k|^2 / 2)`), then another potential half-step.
//! Every substep is pointwise or Fourier unitary, so mass is conserved to
//! round-off per step; the global error is O(dt^2).
//!
//! Time-dependent potentials are sampled at the substep midpoints
//! (`t + dt/4` and `t + 3dt/4`), which preserves second order.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Result, ScnlsError};
use crate::grid::{Grid, WaveField};
use crate::potential::CanonicalPotential;
use crate::profile::{concentrate_profile, Profile};
use crate::spectral::{fft_all_axes, to_fourier, from_fourier, spectral_derivative};

/// Smooth subquadratic potential given by closures, possibly time-dependent.
#[derive(Clone)]
pub struct GeneralPotential {
    pub name: String,
    pub time_dependent: bool,
    pub v: Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>,
    pub grad: Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>,
}

impl std::fmt::Debug for GeneralPotential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GeneralPotential({})", self.name)
    }
}

impl GeneralPotential {
    /// `V(t,x) = cos(t) * |x|^2 / 2` — genuinely time-dependent, subquadratic.
    pub fn harmonic_cos_t() -> Self {
        GeneralPotential {
            name: "half_x2_cos_t".into(),
            time_dependent: true,
            v: Arc::new(|t, x| 0.5 * t.cos() * x.iter().map(|v| v * v).sum::<f64>()),
            grad: Arc::new(|t, x| x.iter().map(|v| t.cos() * v).collect()),
        }
    }

    /// `V(x) = |x|^2 / 2` through the general-potential code path.
    pub fn harmonic_static() -> Self {
        GeneralPotential {
            name: "half_x2".into(),
            time_dependent: false,
            v: Arc::new(|_, x| 0.5 * x.iter().map(|v| v * v).sum::<f64>()),
            grad: Arc::new(|_, x| x.to_vec()),
        }
    }

    /// `V(x) = x^4/4` (summed over axes); the rigidity counterexample,
    /// used on domains |x| <= 6 where it stays numerically subquadratic-like.
    pub fn quartic_quarter() -> Self {
        GeneralPotential {
            name: "quartic_quarter".into(),
            time_dependent: false,
            v: Arc::new(|_, x| x.iter().map(|v| v.powi(4) / 4.0).sum::<f64>()),
            grad: Arc::new(|_, x| x.iter().map(|v| v.powi(3)).collect()),
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "half_x2_cos_t" => Ok(Self::harmonic_cos_t()),
            "half_x2" => Ok(Self::harmonic_static()),
            "quartic_quarter" => Ok(Self::quartic_quarter()),
            other => Err(ScnlsError::Config(format!(
                "unknown general potential preset '{other}'"
            ))),
        }
    }

    /// Spot-check the closures: gradient consistency against finite
    /// differences and finite second differences, at sample points/times.
    pub fn validate_on(&self, grid: &Grid, times: &[f64]) -> Result<()> {
        let dim = grid.dim();
        let h = 1e-5;
        for &t in times {
            for s in 0..8 {
                let frac = (s as f64 + 0.5) / 8.0;
                let x: Vec<f64> = (0..dim)
                    .map(|a| -grid.half_width(a) + 2.0 * grid.half_width(a) * frac)
                    .collect();
                let g = (self.grad)(t, &x);
                for a in 0..dim {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[a] += h;
                    xm[a] -= h;
                    let fd = ((self.v)(t, &xp) - (self.v)(t, &xm)) / (2.0 * h);
                    let scale = 1.0 + g[a].abs();
                    if !fd.is_finite() || (fd - g[a]).abs() > 1e-4 * scale {
                        return Err(ScnlsError::Config(format!(
                            "gradient closure of '{}' disagrees with finite differences at t={t}, x={x:?}: {fd} vs {}",
                            self.name, g[a]
                        )));
                    }
                    let second =
                        ((self.v)(t, &xp) - 2.0 * (self.v)(t, &x) + (self.v)(t, &xm)) / (h * h);
                    if !second.is_finite() {
                        return Err(ScnlsError::Config(format!(
                            "second difference of '{}' not finite at t={t}, x={x:?}",
                            self.name
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// The potential term of an evolution problem.
#[derive(Debug, Clone)]
pub enum PotentialTerm {
    None,
    Canonical(CanonicalPotential),
    General(GeneralPotential),
}

impl PotentialTerm {
    pub fn is_time_dependent(&self) -> bool {
        matches!(self, PotentialTerm::General(g) if g.time_dependent)
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        match self {
            PotentialTerm::None => 0.0,
            PotentialTerm::Canonical(p) => p.eval(x, false).expect("dim checked"),
            PotentialTerm::General(g) => (g.v)(t, x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EvolutionKind {
    /// `i eps u_t + eps^2/2 Lap u = V u + eps^(n sigma) |u|^(2s) u`
    SemiclassicalNls,
    /// same linear part, no nonlinearity
    Linear,
    /// unit-scale reference equation: `i u_t + Lap u / 2 = V u + |u|^(2s) u`
    ReferenceNls,
    /// free group, no potential, no nonlinearity
    Free,
}

#[derive(Debug, Clone)]
pub struct EvolutionProblem {
    pub kind: EvolutionKind,
    pub potential: PotentialTerm,
    pub sigma: f64,
    pub eps: f64,
    /// Coefficient in front of `|u|^(2 sigma) u`.
    pub nonlinearity_scale: f64,
}

/// Admissibility of the nonlinearity power for the configured dimension:
/// `sigma > 1` in 1D, `sigma > 1/2` in 2D, plus the scattering-theory lower
/// bound `(2 - n + sqrt(n^2 + 12n + 4))/(4n)` unless small data is declared.
pub fn validate_sigma(dim: usize, sigma: f64, small_data: bool) -> Result<()> {
    let n = dim as f64;
    let base = match dim {
        1 => 1.0,
        2 => 0.5,
        _ => {
            return Err(ScnlsError::NonAdmissibleSigma {
                sigma,
                dim,
                reason: "numerical pipeline supports dim 1 and 2".into(),
            })
        }
    };
    if sigma <= base {
        return Err(ScnlsError::NonAdmissibleSigma {
            sigma,
            dim,
            reason: format!("requires sigma > {base} in dimension {dim}"),
        });
    }
    let scatter_bound = (2.0 - n + (n * n + 12.0 * n + 4.0).sqrt()) / (4.0 * n);
    if sigma <= scatter_bound && !small_data {
        return Err(ScnlsError::NonAdmissibleSigma {
            sigma,
            dim,
            reason: format!(
                "requires sigma > {scatter_bound:.6} for scattering, or the small-data flag"
            ),
        });
    }
    Ok(())
}

impl EvolutionProblem {
    pub fn semiclassical(
        potential: PotentialTerm,
        dim: usize,
        sigma: f64,
        eps: f64,
        small_data: bool,
    ) -> Result<Self> {
        validate_sigma(dim, sigma, small_data)?;
        Ok(EvolutionProblem {
            kind: EvolutionKind::SemiclassicalNls,
            potential,
            sigma,
            eps,
            nonlinearity_scale: eps.powf(dim as f64 * sigma),
        })
    }

    pub fn linear(potential: PotentialTerm, eps: f64) -> Self {
        EvolutionProblem {
            kind: EvolutionKind::Linear,
            potential,
            sigma: 1.0,
            eps,
            nonlinearity_scale: 0.0,
        }
    }

    pub fn reference_nls(dim: usize, sigma: f64, small_data: bool) -> Result<Self> {
        validate_sigma(dim, sigma, small_data)?;
        Ok(EvolutionProblem {
            kind: EvolutionKind::ReferenceNls,
            potential: PotentialTerm::None,
            sigma,
            eps: 1.0,
            nonlinearity_scale: 1.0,
        })
    }

    pub fn free(eps: f64) -> Self {
        EvolutionProblem {
            kind: EvolutionKind::Free,
            potential: PotentialTerm::None,
            sigma: 1.0,
            eps,
            nonlinearity_scale: 0.0,
        }
    }

    /// Same problem with the nonlinear coefficient forced to zero
    /// (sanity modes).
    pub fn with_nonlinearity_off(mut self) -> Self {
        self.nonlinearity_scale = 0.0;
        self
    }
}

/// Stepper: requested dt (adjusted downward to divide each snapshot interval)
/// and the sorted snapshot times. Scheme is fixed: Strang.
#[derive(Debug, Clone)]
pub struct StepperConfig {
    pub dt: f64,
    pub snapshot_times: Vec<f64>,
}

impl StepperConfig {
    pub fn new(dt: f64, snapshot_times: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(ScnlsError::ParameterDomain(format!(
                "dt must be positive, got {dt}"
            )));
        }
        if snapshot_times.is_empty() {
            return Err(ScnlsError::ParameterDomain(
                "at least one snapshot time required".into(),
            ));
        }
        Ok(StepperConfig { dt, snapshot_times })
    }
}

/// Default step size: the solution oscillates at rate ~1/eps, so resolve
/// fifty steps per eps-period, and never fewer than a thousand steps overall.
pub fn default_dt(eps: f64, t_total: f64) -> f64 {
    (eps / 50.0).min(1e-3 * t_total.abs().max(1e-12))
}

#[derive(Debug, Clone, Serialize)]
pub struct TracePoint {
    pub t: f64,
    pub mass: f64,
    pub boundary_fraction: f64,
}

#[derive(Debug)]
pub struct EvolveOutput {
    pub snapshots: Vec<WaveField>,
    pub trace: Vec<TracePoint>,
    pub tainted: bool,
    pub steps: usize,
}

/// Mass fraction within 10% of the boundary above which a run is tainted.
pub const BOUNDARY_MASS_LIMIT: f64 = 1e-8;

struct Stepper<'a> {
    problem: &'a EvolutionProblem,
    grid: Grid,
    /// |k|^2 per flat index
    k_sq: Vec<f64>,
    /// static potential samples, when the potential is time-independent
    v_static: Option<Vec<f64>>,
    /// integer sigma fast path
    sigma_int: Option<i32>,
}

impl<'a> Stepper<'a> {
    fn new(problem: &'a EvolutionProblem, grid: Grid) -> Self {
        let k_sq = (0..grid.total_points())
            .map(|idx| {
                let ij = grid.decode(idx);
                (0..grid.dim())
                    .map(|a| grid.wavenumber(a, ij[a]).powi(2))
                    .sum()
            })
            .collect();
        let v_static = if problem.potential.is_time_dependent() {
            None
        } else {
            Some(
                (0..grid.total_points())
                    .map(|idx| {
                        let x = grid.position(idx);
                        problem.potential.eval(0.0, &x[..grid.dim()])
                    })
                    .collect(),
            )
        };
        let sigma_int = if (problem.sigma - problem.sigma.round()).abs() < 1e-12
            && problem.sigma.round() >= 1.0
        {
            Some(problem.sigma.round() as i32)
        } else {
            None
        };
        Stepper {
            problem,
            grid,
            k_sq,
            v_static,
            sigma_int,
        }
    }

    fn modulus_power(&self, norm_sqr: f64) -> f64 {
        match self.sigma_int {
            Some(s) => norm_sqr.powi(s),
            None => norm_sqr.powf(self.problem.sigma),
        }
    }

    /// Exact phase flow of the potential + nonlinearity over `tau`,
    /// potential sampled at time `t_sample`.
    fn phase_half(&self, u: &mut [Complex64], tau: f64, t_sample: f64) {
        let nu = self.problem.nonlinearity_scale;
        let coef = -tau / self.problem.eps;
        match (&self.v_static, nu != 0.0) {
            (Some(v), true) => {
                for (z, &vi) in u.iter_mut().zip(v.iter()) {
                    let phase = coef * (vi + nu * self.modulus_power(z.norm_sqr()));
                    *z *= Complex64::from_polar(1.0, phase);
                }
            }
            (Some(v), false) => {
                for (z, &vi) in u.iter_mut().zip(v.iter()) {
                    *z *= Complex64::from_polar(1.0, coef * vi);
                }
            }
            (None, _) => {
                for (idx, z) in u.iter_mut().enumerate() {
                    let x = self.grid.position(idx);
                    let vi = self.problem.potential.eval(t_sample, &x[..self.grid.dim()]);
                    let nl = if nu != 0.0 {
                        nu * self.modulus_power(z.norm_sqr())
                    } else {
                        0.0
                    };
                    *z *= Complex64::from_polar(1.0, coef * (vi + nl));
                }
            }
        }
    }

    fn kinetic(&self, u: &mut [Complex64], dt: f64) {
        fft_all_axes(&self.grid, u, false);
        let c = -dt * self.problem.eps / 2.0;
        for (z, &k2) in u.iter_mut().zip(self.k_sq.iter()) {
            *z *= Complex64::from_polar(1.0, c * k2);
        }
        fft_all_axes(&self.grid, u, true);
    }

    /// One Strang step from `t` over `dt` (either sign).
    fn step(&self, u: &mut [Complex64], t: f64, dt: f64) {
        self.phase_half(u, dt / 2.0, t + dt / 4.0);
        self.kinetic(u, dt);
        self.phase_half(u, dt / 2.0, t + 3.0 * dt / 4.0);
    }
}

/// Evolve `u0` through the snapshot times of `config` (monotone, moving away
/// from `u0.time_stamp` in a single direction; both signs supported).
/// Returns the snapshots plus mass/boundary traces. A boundary-mass violation
/// taints the run but does not abort; a non-finite field aborts.
pub fn evolve(
    problem: &EvolutionProblem,
    u0: &WaveField,
    config: &StepperConfig,
) -> Result<EvolveOutput> {
    let grid = u0.grid;
    let t0 = u0.time_stamp;
    let times = &config.snapshot_times;
    let forward = times.last().unwrap() >= &t0;
    let mut prev = t0;
    for &t in times {
        let ok = if forward { t >= prev } else { t <= prev };
        if !ok {
            return Err(ScnlsError::ParameterDomain(format!(
                "snapshot times must be monotone away from t0={t0}"
            )));
        }
        prev = t;
    }

    let stepper = Stepper::new(problem, grid);
    let mut data = u0.data.clone();
    let mut t_cur = t0;
    let mut snapshots = Vec::with_capacity(times.len());
    let mut trace = Vec::with_capacity(times.len());
    let mut tainted = false;
    let mut steps_total = 0usize;

    for &t_snap in times {
        let delta = t_snap - t_cur;
        if delta.abs() > 1e-14 {
            let n = ((delta.abs() / config.dt) - 1e-9).ceil().max(1.0) as usize;
            let dt = delta / n as f64;
            for j in 0..n {
                let t_step = t_cur + j as f64 * dt;
                stepper.step(&mut data, t_step, dt);
                steps_total += 1;
                // cheap per-step health check
                let m: f64 = data.iter().map(|z| z.norm_sqr()).sum();
                if !m.is_finite() {
                    return Err(ScnlsError::NanDetected {
                        step: steps_total,
                        t: t_step + dt,
                    });
                }
            }
        }
        t_cur = t_snap;
        let mut snap = WaveField::new(grid, u0.eps, data.clone())?;
        snap.time_stamp = t_snap;
        let bf = snap.boundary_mass_fraction();
        if bf > BOUNDARY_MASS_LIMIT {
            tainted = true;
        }
        trace.push(TracePoint {
            t: t_snap,
            mass: snap.mass(),
            boundary_fraction: bf,
        });
        snapshots.push(snap);
    }

    Ok(EvolveOutput {
        snapshots,
        trace,
        tainted,
        steps: steps_total,
    })
}

/// One-shot free group `U0(t) = exp(i t Lap / 2)` (unit-scale convention):
/// an exact Fourier multiplier, no time stepping.
pub fn free_group(u: &WaveField, t: f64) -> WaveField {
    let mut hat = to_fourier(u);
    let grid = u.grid;
    for (idx, z) in hat.iter_mut().enumerate() {
        let ij = grid.decode(idx);
        let k2: f64 = (0..grid.dim())
            .map(|a| grid.wavenumber(a, ij[a]).powi(2))
            .sum();
        *z *= Complex64::from_polar(1.0, -t * k2 / 2.0);
    }
    let mut out = from_fourier(grid, u.eps, hat);
    out.time_stamp = u.time_stamp + t;
    out
}

/// Conserved energy of the problem:
/// `1/2 ||eps grad u||^2 + nu/(sigma+1) ||u||_{2s+2}^{2s+2} + int V |u|^2`.
/// For inverted axes the potential integral is negative.
pub fn energy(problem: &EvolutionProblem, u: &WaveField) -> f64 {
    let mut grad_sq = 0.0;
    for a in 0..u.grid.dim() {
        let d = spectral_derivative(u, a);
        let n = problem.eps * d.l2_norm();
        grad_sq += n * n;
    }
    let mut e = 0.5 * grad_sq;
    if problem.nonlinearity_scale != 0.0 {
        let r = 2.0 * problem.sigma + 2.0;
        e += problem.nonlinearity_scale / (problem.sigma + 1.0) * u.lr_norm(r).powf(r);
    }
    if !matches!(problem.potential, PotentialTerm::None) {
        let dv = u.grid.cell_volume();
        let mut pot = 0.0;
        for (idx, z) in u.data.iter().enumerate() {
            let x = u.grid.position(idx);
            pot += problem.potential.eval(u.time_stamp, &x[..u.grid.dim()]) * z.norm_sqr();
        }
        e += dv * pot;
    }
    e
}

/// Concentrate a reference profile and evolve it under the linear flow:
/// the building block for the beyond-layer comparison fields.
pub fn linear_asymptotic_solution(
    p: &CanonicalPotential,
    psi: &Profile,
    eps: f64,
    grid: Grid,
    config: &StepperConfig,
) -> Result<EvolveOutput> {
    let u0 = concentrate_profile(psi, eps, grid, &vec![0.0; grid.dim()], &vec![0.0; grid.dim()], 0.0)?;
    let problem = EvolutionProblem::linear(PotentialTerm::Canonical(p.clone()), eps);
    evolve(&problem, &u0, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn gaussian_field(grid: Grid, eps: f64) -> WaveField {
        WaveField::from_fn(grid, eps, |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            Complex64::new((-r2 / 2.0).exp(), 0.0)
        })
    }

    /// Free-Gaussian closed form: exp(i t Lap/2) e^{-x^2/2} = (1+it)^{-1/2} e^{-x^2/(2(1+it))}.
    fn free_gaussian(grid: Grid, t: f64) -> WaveField {
        let w = Complex64::new(1.0, t);
        WaveField::from_fn(grid, 1.0, |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            (-(Complex64::new(r2, 0.0)) / (2.0 * w)).exp() / w.sqrt()
        })
    }

    #[test]
    fn free_group_matches_closed_form_and_group_law() {
        let g = Grid::new(1, 512, 20.0).unwrap();
        let u0 = gaussian_field(g, 1.0);
        let u1 = free_group(&u0, 1.0);
        let expect = free_gaussian(g, 1.0);
        assert!(u1.l2_distance(&expect) < 1e-10);
        // group law and invertibility
        let a = free_group(&free_group(&u0, 0.35), 0.65);
        assert!(a.l2_distance(&u1) < 1e-12);
        let back = free_group(&u1, -1.0);
        assert!(back.l2_distance(&u0) < 1e-12);
        // t = 0 is the identity
        assert!(free_group(&u0, 0.0).l2_distance(&u0) < 1e-14);
    }

    #[test]
    fn free_kind_evolve_is_exact() {
        let g = Grid::new(1, 512, 20.0).unwrap();
        let u0 = gaussian_field(g, 1.0);
        let problem = EvolutionProblem::free(1.0);
        let cfg = StepperConfig::new(1e-3, vec![1.0]).unwrap();
        let out = evolve(&problem, &u0, &cfg).unwrap();
        let expect = free_gaussian(g, 1.0);
        assert!(out.snapshots[0].l2_distance(&expect) < 1e-8);
        assert!(!out.tainted);
    }

    #[test]
    fn mass_conserved_to_round_off() {
        let g = Grid::new(1, 256, 8.0).unwrap();
        let u0 = gaussian_field(g, 0.25);
        let p = CanonicalPotential::from_axes(vec![1], vec![1.0], vec![0.0], 0.0).unwrap();
        let problem =
            EvolutionProblem::semiclassical(PotentialTerm::Canonical(p), 1, 2.0, 0.25, false)
                .unwrap();
        let cfg = StepperConfig::new(1e-3, vec![0.5, 1.0]).unwrap();
        let out = evolve(&problem, &u0, &cfg).unwrap();
        let m0 = u0.mass();
        for tp in &out.trace {
            assert!((tp.mass - m0).abs() < 1e-12 * m0);
        }
    }

    #[test]
    fn coherent_state_center_follows_bicharacteristic() {
        // linear kind, harmonic, eps = 1: center of a coherent state moves on cos t
        let g = Grid::new(1, 1024, 12.0).unwrap();
        let u0 = WaveField::from_fn(g, 1.0, |x| {
            Complex64::new((-(x[0] - 1.0) * (x[0] - 1.0) / 2.0).exp(), 0.0)
        });
        let p = CanonicalPotential::from_axes(vec![1], vec![1.0], vec![0.0], 0.0).unwrap();
        let problem = EvolutionProblem::linear(PotentialTerm::Canonical(p), 1.0);
        let cfg = StepperConfig::new(1e-3, vec![0.5, 1.0]).unwrap();
        let out = evolve(&problem, &u0, &cfg).unwrap();
        for snap in &out.snapshots {
            let t = snap.time_stamp;
            let mut m0 = 0.0;
            let mut m1 = 0.0;
            for (idx, z) in snap.data.iter().enumerate() {
                let x = g.point(0, idx);
                m0 += z.norm_sqr();
                m1 += x * z.norm_sqr();
            }
            let center = m1 / m0;
            assert!(
                (center - t.cos()).abs() < 1e-6,
                "t={t}: center={center} vs {}",
                t.cos()
            );
        }
    }

    #[test]
    fn semiclassical_with_zero_scale_matches_linear_bitwise() {
        let g = Grid::new(1, 256, 8.0).unwrap();
        let u0 = gaussian_field(g, 0.25);
        let p = CanonicalPotential::from_axes(vec![-1], vec![1.0], vec![0.0], 0.0).unwrap();
        let nl = EvolutionProblem::semiclassical(
            PotentialTerm::Canonical(p.clone()),
            1,
            2.0,
            0.25,
            false,
        )
        .unwrap()
        .with_nonlinearity_off();
        let lin = EvolutionProblem::linear(PotentialTerm::Canonical(p), 0.25);
        let cfg = StepperConfig::new(1e-3, vec![0.4]).unwrap();
        let a = evolve(&nl, &u0, &cfg).unwrap();
        let b = evolve(&lin, &u0, &cfg).unwrap();
        assert_eq!(a.snapshots[0].data, b.snapshots[0].data);
    }

    #[test]
    fn strang_is_second_order_for_each_kind() {
        let g = Grid::new(1, 256, 10.0).unwrap();
        let harmonic = CanonicalPotential::from_axes(vec![1], vec![1.0], vec![0.0], 0.0).unwrap();
        let cases: Vec<(EvolutionProblem, f64)> = vec![
            (
                EvolutionProblem::semiclassical(
                    PotentialTerm::Canonical(harmonic.clone()),
                    1,
                    2.0,
                    0.25,
                    false,
                )
                .unwrap(),
                0.25,
            ),
            (
                EvolutionProblem::linear(PotentialTerm::Canonical(harmonic.clone()), 0.25),
                0.25,
            ),
            (EvolutionProblem::reference_nls(1, 2.0, false).unwrap(), 1.0),
        ];
        for (problem, eps) in cases {
            let u0 = gaussian_field(g, eps);
            let t_end = 0.5;
            let run = |dt: f64| {
                let cfg = StepperConfig::new(dt, vec![t_end]).unwrap();
                evolve(&problem, &u0, &cfg).unwrap().snapshots.remove(0)
            };
            let reference = run(1e-3 / 8.0);
            let e1 = run(1e-3).l2_distance(&reference);
            let e2 = run(5e-4).l2_distance(&reference);
            let ratio = e1 / e2;
            assert!(
                (3.5..=4.5).contains(&ratio),
                "kind {:?}: ratio {ratio} (e1={e1:.3e}, e2={e2:.3e})",
                problem.kind
            );
        }
    }

    #[test]
    fn energy_gaussian_free_linear() {
        let g = Grid::new(1, 512, 10.0).unwrap();
        let u = gaussian_field(g, 1.0);
        let problem = EvolutionProblem::linear(PotentialTerm::None, 1.0);
        let e = energy(&problem, &u);
        let expect = std::f64::consts::PI.sqrt() / 4.0;
        assert!((e - expect).abs() < 1e-10, "{e} vs {expect}");
        assert_eq!(energy(&problem, &WaveField::zeros(g, 1.0)), 0.0);
    }

    #[test]
    fn energy_drift_is_second_order() {
        let g = Grid::new(1, 512, 8.0).unwrap();
        let eps = 0.125;
        let u0 = gaussian_field(g, eps);
        let p = CanonicalPotential::from_axes(vec![1], vec![1.0], vec![0.0], 0.0).unwrap();
        let problem =
            EvolutionProblem::semiclassical(PotentialTerm::Canonical(p), 1, 2.0, eps, false)
                .unwrap();
        let drift = |dt: f64| {
            let times: Vec<f64> = (1..=20).map(|i| i as f64 * 0.05).collect();
            let out = evolve(&problem, &u0, &StepperConfig::new(dt, times).unwrap()).unwrap();
            let e0 = energy(&problem, &u0);
            out.snapshots
                .iter()
                .map(|s| (energy(&problem, s) - e0).abs())
                .fold(0.0f64, f64::max)
        };
        let d1 = drift(2e-3);
        let d2 = drift(1e-3);
        let ratio = d1 / d2;
        assert!(
            (3.5..=4.5).contains(&ratio),
            "energy Richardson ratio {ratio} (d1={d1:.3e}, d2={d2:.3e})"
        );
    }

    #[test]
    fn eps_scaling_identity_for_free_nonlinear() {
        // with V = 0 the semiclassical solution is the concentrated
        // reference solution at time t/eps; matched steppers reproduce it
        // to round-off
        let eps = 0.125f64;
        let n = 1024;
        let l = 8.0;
        let g_exp = Grid::new(1, n, l).unwrap();
        let g_ref = Grid::new(1, n, l / eps).unwrap();
        let phi = crate::profile::Profile::gaussian(1.0, 1.0);
        let u0 = concentrate_profile(&phi, eps, g_exp, &[0.0], &[0.0], 0.0).unwrap();
        let psi0 = phi.sample(g_ref).unwrap();

        let s_end = 1.6;
        let nsteps = 400.0;
        let dt_ref = s_end / nsteps;
        let dt_exp = eps * dt_ref;

        let semi = EvolutionProblem::semiclassical(PotentialTerm::None, 1, 2.0, eps, false).unwrap();
        let refp = EvolutionProblem::reference_nls(1, 2.0, false).unwrap();
        let u = evolve(&semi, &u0, &StepperConfig::new(dt_exp, vec![eps * s_end]).unwrap())
            .unwrap()
            .snapshots
            .remove(0);
        let psi = evolve(&refp, &psi0, &StepperConfig::new(dt_ref, vec![s_end]).unwrap())
            .unwrap()
            .snapshots
            .remove(0);
        // compare pointwise: u(t, x) = eps^{-1/2} psi(t/eps, x/eps), grids aligned
        let scale = eps.powf(-0.5);
        let mut max_err = 0.0f64;
        for i in 0..n {
            let err = (u.data[i] - scale * psi.data[i]).norm();
            max_err = max_err.max(err);
        }
        assert!(max_err * (g_exp.dx(0)).sqrt() < 1e-6, "max_err={max_err:.3e}");
    }

    #[test]
    fn sigma_validation_matches_assumptions() {
        assert!(validate_sigma(1, 2.0, false).is_ok());
        assert!(validate_sigma(1, 0.8, false).is_err());
        // between 1 and the scattering bound (1+sqrt(17))/4 ~ 1.28: small data only
        assert!(validate_sigma(1, 1.1, false).is_err());
        assert!(validate_sigma(1, 1.1, true).is_ok());
        assert!(validate_sigma(2, 1.0, false).is_ok());
        assert!(validate_sigma(2, 0.6, false).is_err());
        assert!(validate_sigma(2, 0.6, true).is_ok());
        assert!(validate_sigma(2, 0.4, true).is_err());
    }

    #[test]
    fn general_potential_validation() {
        let g = Grid::new(1, 64, 6.0).unwrap();
        for preset in ["half_x2_cos_t", "half_x2", "quartic_quarter"] {
            let v = GeneralPotential::by_name(preset).unwrap();
            v.validate_on(&g, &[0.0, 0.5, 1.0]).unwrap();
        }
        assert!(GeneralPotential::by_name("nope").is_err());
        // a broken gradient closure is caught
        let bad = GeneralPotential {
            name: "bad".into(),
            time_dependent: false,
            v: Arc::new(|_, x| x[0] * x[0]),
            grad: Arc::new(|_, x| vec![x[0]]), // should be 2x
        };
        assert!(bad.validate_on(&g, &[0.0]).is_err());
    }

    #[test]
    fn general_static_path_matches_canonical_path() {
        let g = Grid::new(1, 256, 8.0).unwrap();
        let eps = 0.25;
        let u0 = gaussian_field(g, eps);
        let canon = CanonicalPotential::from_axes(vec![1], vec![1.0], vec![0.0], 0.0).unwrap();
        let a = EvolutionProblem::linear(PotentialTerm::Canonical(canon), eps);
        let b = EvolutionProblem::linear(
            PotentialTerm::General(GeneralPotential::harmonic_static()),
            eps,
        );
        let cfg = StepperConfig::new(1e-3, vec![0.5]).unwrap();
        let ua = evolve(&a, &u0, &cfg).unwrap().snapshots.remove(0);
        let ub = evolve(&b, &u0, &cfg).unwrap().snapshots.remove(0);
        assert!(ua.l2_distance(&ub) < 1e-10);
    }

    #[test]
    fn backward_evolution_supported() {
        let g = Grid::new(1, 256, 8.0).unwrap();
        let u0 = gaussian_field(g, 0.25);
        let p = CanonicalPotential::from_axes(vec![1], vec![1.0], vec![0.0], 0.0).unwrap();
        let problem = EvolutionProblem::linear(PotentialTerm::Canonical(p), 0.25);
        let fwd = evolve(&problem, &u0, &StepperConfig::new(1e-3, vec![0.3]).unwrap()).unwrap();
        let mut at_t = fwd.snapshots[0].clone();
        at_t.time_stamp = 0.3;
        let back = evolve(&problem, &at_t, &StepperConfig::new(1e-3, vec![0.0]).unwrap()).unwrap();
        assert!(back.snapshots[0].l2_distance(&u0) < 1e-9);
    }
}
