//! Exact algebra of generalized quadratic potentials: canonical reduction,
//! auxiliary flows and closed-form bicharacteristics.
//!
//! A degree-two potential `V(y) = y.Qy + beta.y + gamma` is brought, by an
//! orthogonal change of frame and an origin shift, to the canonical form
//!
//! ```text
//! V(x) = 1/2 sum_j delta_j omega_j^2 x_j^2 + sum_j b_j x_j + c,
//! delta_j in {-1, 0, +1},  omega_j > 0,  delta_j * b_j = 0,
//! ```
//!
//! where `1/2 delta_j omega_j^2` are the eigenvalues of `Q`. All operations
//! here are pure functions of immutable inputs.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScnlsError};

/// Degree-<=2 potential in its original coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawPotential {
    pub dim: usize,
    /// Symmetric matrix Q, row-major; V includes the full double sum y.Qy.
    pub quad: Vec<f64>,
    pub lin: Vec<f64>,
    pub const_term: f64,
}

impl RawPotential {
    pub fn new(dim: usize, quad: Vec<f64>, lin: Vec<f64>, const_term: f64) -> Result<Self> {
        if quad.len() != dim * dim || lin.len() != dim {
            return Err(ScnlsError::DimensionMismatch {
                expected: dim * dim,
                got: quad.len(),
            });
        }
        for i in 0..dim {
            for j in 0..i {
                let (a, b) = (quad[i * dim + j], quad[j * dim + i]);
                if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                    return Err(ScnlsError::ParameterDomain(format!(
                        "quadratic part not symmetric at ({i},{j}): {a} vs {b}"
                    )));
                }
            }
        }
        Ok(RawPotential {
            dim,
            quad,
            lin,
            const_term,
        })
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        let n = self.dim;
        let mut v = self.const_term;
        for i in 0..n {
            v += self.lin[i] * y[i];
            for j in 0..n {
                v += self.quad[i * n + j] * y[i] * y[j];
            }
        }
        v
    }
}

/// Canonical form of Lemma-style reduction. `omega[j]` is stored as 1 and
/// never read when `delta[j] = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalPotential {
    pub dim: usize,
    pub delta: Vec<i8>,
    pub omega: Vec<f64>,
    pub b: Vec<f64>,
    pub c: f64,
    /// New origin in original coordinates.
    pub origin_shift: Vec<f64>,
    /// Orthogonal matrix, column j = frame vector f_j, row-major.
    pub frame: Vec<f64>,
}

/// Classification metadata from the reduction, echoed into run logs.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ReductionDiagnostics {
    pub eigenvalues: Vec<f64>,
    pub tol_zero: f64,
    /// Indices whose eigenvalue fell inside the tol_zero band.
    pub near_zero: Vec<usize>,
}

impl CanonicalPotential {
    /// Canonical potential in an identity frame (handy for configs and tests).
    pub fn from_axes(delta: Vec<i8>, omega: Vec<f64>, b: Vec<f64>, c: f64) -> Result<Self> {
        let dim = delta.len();
        if omega.len() != dim || b.len() != dim {
            return Err(ScnlsError::DimensionMismatch {
                expected: dim,
                got: omega.len().min(b.len()),
            });
        }
        for j in 0..dim {
            if delta[j] != 0 && b[j] != 0.0 {
                return Err(ScnlsError::ParameterDomain(format!(
                    "delta[{j}]*b[{j}] != 0 violates the canonical form"
                )));
            }
            if !(omega[j] > 0.0) {
                return Err(ScnlsError::ParameterDomain(format!(
                    "omega[{j}] must be positive"
                )));
            }
        }
        let mut frame = vec![0.0; dim * dim];
        for j in 0..dim {
            frame[j * dim + j] = 1.0;
        }
        Ok(CanonicalPotential {
            dim,
            delta,
            omega,
            b,
            c,
            origin_shift: vec![0.0; dim],
            frame,
        })
    }

    pub fn free(dim: usize) -> Self {
        CanonicalPotential::from_axes(vec![0; dim], vec![1.0; dim], vec![0.0; dim], 0.0).unwrap()
    }

    pub fn is_zero(&self) -> bool {
        self.delta.iter().all(|&d| d == 0)
            && self.b.iter().all(|&b| b == 0.0)
            && self.c == 0.0
    }

    pub fn has_stark_term(&self) -> bool {
        self.b.iter().any(|&b| b != 0.0)
    }

    /// V in canonical coordinates, without the constant unless `include_c`.
    pub fn eval(&self, x: &[f64], include_c: bool) -> Result<f64> {
        if x.len() != self.dim {
            return Err(ScnlsError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut v = if include_c { self.c } else { 0.0 };
        for j in 0..self.dim {
            v += 0.5 * self.delta[j] as f64 * self.omega[j] * self.omega[j] * x[j] * x[j]
                + self.b[j] * x[j];
        }
        Ok(v)
    }

    /// Canonical coordinates of an original-frame point: x = F^T (y - origin).
    pub fn to_canonical_coords(&self, y: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n)
            .map(|j| {
                (0..n)
                    .map(|i| self.frame[i * n + j] * (y[i] - self.origin_shift[i]))
                    .sum()
            })
            .collect()
    }

    /// Evaluate in ORIGINAL coordinates (always includes c); must agree with
    /// the raw potential it was reduced from.
    pub fn eval_original(&self, y: &[f64]) -> Result<f64> {
        let x = self.to_canonical_coords(y);
        self.eval(&x, true)
    }

    /// Auxiliary flow pair `(g_j(t), h_j(t))`:
    /// `sin(wt)/w, cos(wt)` for trapped axes, `t, 1` for free axes,
    /// `sinh(wt)/w, cosh(wt)` for inverted axes. Satisfies
    /// `h^2 + delta w^2 g^2 = 1`.
    pub fn gh(&self, j: usize, t: f64) -> (f64, f64) {
        let w = self.omega[j];
        match self.delta[j] {
            1 => ((w * t).sin() / w, (w * t).cos()),
            0 => (t, 1.0),
            _ => ((w * t).sinh() / w, (w * t).cosh()),
        }
    }

    /// Spring constant `delta_j omega_j^2` of axis j.
    pub fn spring(&self, j: usize) -> f64 {
        self.delta[j] as f64 * self.omega[j] * self.omega[j]
    }

    /// Gradient of V (no constant) in canonical coordinates.
    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|j| self.spring(j) * x[j] + self.b[j])
            .collect()
    }

    /// Smallest omega over trapped axes, if any (used by integral bounds).
    pub fn min_trapped_omega(&self) -> Option<f64> {
        self.delta
            .iter()
            .zip(&self.omega)
            .filter(|(&d, _)| d == 1)
            .map(|(_, &w)| w)
            .fold(None, |acc, w| Some(acc.map_or(w, |a: f64| a.min(w))))
    }

    /// Times in `(a, b)` where some `g_j` vanishes (refocusing times).
    pub fn refocus_times(&self, a: f64, b: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for j in 0..self.dim {
            match self.delta[j] {
                1 => {
                    let w = self.omega[j];
                    let pi = std::f64::consts::PI;
                    let m_lo = (a * w / pi).ceil() as i64;
                    let m_hi = (b * w / pi).floor() as i64;
                    for m in m_lo..=m_hi {
                        let t = m as f64 * pi / w;
                        if t > a && t < b {
                            out.push(t);
                        }
                    }
                }
                _ => {
                    if a < 0.0 && 0.0 < b {
                        out.push(0.0);
                    }
                }
            }
        }
        out.sort_by(|x, y| x.partial_cmp(y).unwrap());
        out.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
        out
    }
}

/// Classical state (position, momentum).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
}

impl PhasePoint {
    pub fn new(x: Vec<f64>, xi: Vec<f64>) -> Result<Self> {
        if x.len() != xi.len() {
            return Err(ScnlsError::DimensionMismatch {
                expected: x.len(),
                got: xi.len(),
            });
        }
        if !x.iter().chain(xi.iter()).all(|v| v.is_finite()) {
            return Err(ScnlsError::ParameterDomain(
                "phase point entries must be finite".into(),
            ));
        }
        Ok(PhasePoint { x, xi })
    }

    pub fn origin(dim: usize) -> Self {
        PhasePoint {
            x: vec![0.0; dim],
            xi: vec![0.0; dim],
        }
    }
}

/// Bring a raw degree-two potential to canonical form. Total function: the
/// eigenvalue classification uses `tol_zero = 1e-9 * spectral radius`, and
/// eigenvalues inside that band are flagged in the diagnostics.
pub fn reduce_potential(raw: &RawPotential) -> (CanonicalPotential, ReductionDiagnostics) {
    let n = raw.dim;
    let q = DMatrix::from_row_slice(n, n, &raw.quad);
    // enforce exact symmetry before the solver
    let q = (&q + q.transpose()) * 0.5;
    let eig = q.clone().symmetric_eigen();

    // deterministic order: eigenvalues descending
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());

    let spectral_radius = eig.eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l.abs()));
    let tol_zero = 1e-9 * spectral_radius;

    let beta = DVector::from_column_slice(&raw.lin);

    let mut delta = vec![0i8; n];
    let mut omega = vec![1.0f64; n];
    let mut b = vec![0.0f64; n];
    let mut frame = vec![0.0f64; n * n];
    let mut c = raw.const_term;
    let mut origin = vec![0.0f64; n];
    let mut near_zero = Vec::new();
    let mut eigenvalues = Vec::with_capacity(n);

    for (slot, &col) in order.iter().enumerate() {
        let lambda = eig.eigenvalues[col];
        eigenvalues.push(lambda);
        let mut f: Vec<f64> = eig.eigenvectors.column(col).iter().copied().collect();
        // sign convention: largest-magnitude entry positive
        let lead = f
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        if f[lead] < 0.0 {
            for v in &mut f {
                *v = -*v;
            }
        }
        let beta_j: f64 = (0..n).map(|i| f[i] * beta[i]).sum();
        if lambda.abs() <= tol_zero {
            if spectral_radius > 0.0 && lambda != 0.0 {
                near_zero.push(slot);
            }
            delta[slot] = 0;
            omega[slot] = 1.0;
            b[slot] = beta_j;
        } else {
            delta[slot] = if lambda > 0.0 { 1 } else { -1 };
            omega[slot] = (2.0 * lambda.abs()).sqrt();
            b[slot] = 0.0;
            // complete the square: lambda (x + beta/2lambda)^2 - beta^2/4lambda
            let shift = beta_j / (2.0 * lambda);
            c -= beta_j * beta_j / (4.0 * lambda);
            for i in 0..n {
                origin[i] -= shift * f[i];
            }
        }
        for i in 0..n {
            frame[i * n + slot] = f[i];
        }
    }

    (
        CanonicalPotential {
            dim: n,
            delta,
            omega,
            b,
            c,
            origin_shift: origin,
            frame,
        },
        ReductionDiagnostics {
            eigenvalues,
            tol_zero,
            near_zero,
        },
    )
}

/// Closed-form bicharacteristic flow of `tau + |xi|^2/2 + V(x)`:
/// `x_j(t) = h_j x0_j + g_j xi0_j - b_j t^2/2`,
/// `xi_j(t) = h_j xi0_j - delta_j omega_j^2 g_j x0_j - b_j t`.
pub fn bicharacteristic(p: &CanonicalPotential, start: &PhasePoint, t: f64) -> Result<PhasePoint> {
    if start.x.len() != p.dim {
        return Err(ScnlsError::DimensionMismatch {
            expected: p.dim,
            got: start.x.len(),
        });
    }
    let mut x = vec![0.0; p.dim];
    let mut xi = vec![0.0; p.dim];
    for j in 0..p.dim {
        let (g, h) = p.gh(j, t);
        x[j] = h * start.x[j] + g * start.xi[j] - 0.5 * p.b[j] * t * t;
        xi[j] = h * start.xi[j] - p.spring(j) * g * start.x[j] - p.b[j] * t;
    }
    PhasePoint::new(x, xi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Fixed-step RK4 on Hamilton's equations, the independent flow oracle.
    fn rk4_flow(p: &CanonicalPotential, start: &PhasePoint, t: f64, dt: f64) -> PhasePoint {
        let n = p.dim;
        let rhs = |x: &[f64], xi: &[f64]| -> (Vec<f64>, Vec<f64>) {
            let gv = p.grad(x);
            (xi.to_vec(), gv.iter().map(|g| -g).collect())
        };
        let steps = (t.abs() / dt).round().max(1.0) as usize;
        let h = t / steps as f64;
        let mut x = start.x.clone();
        let mut xi = start.xi.clone();
        for _ in 0..steps {
            let (k1x, k1p) = rhs(&x, &xi);
            let ax: Vec<f64> = (0..n).map(|i| x[i] + 0.5 * h * k1x[i]).collect();
            let ap: Vec<f64> = (0..n).map(|i| xi[i] + 0.5 * h * k1p[i]).collect();
            let (k2x, k2p) = rhs(&ax, &ap);
            let bx: Vec<f64> = (0..n).map(|i| x[i] + 0.5 * h * k2x[i]).collect();
            let bp: Vec<f64> = (0..n).map(|i| xi[i] + 0.5 * h * k2p[i]).collect();
            let (k3x, k3p) = rhs(&bx, &bp);
            let cx: Vec<f64> = (0..n).map(|i| x[i] + h * k3x[i]).collect();
            let cp: Vec<f64> = (0..n).map(|i| xi[i] + h * k3p[i]).collect();
            let (k4x, k4p) = rhs(&cx, &cp);
            for i in 0..n {
                x[i] += h / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
                xi[i] += h / 6.0 * (k1p[i] + 2.0 * k2p[i] + 2.0 * k3p[i] + k4p[i]);
            }
        }
        PhasePoint { x, xi }
    }

    #[test]
    fn reduce_completes_the_square_1d() {
        // V = y^2/2 + y = (y+1)^2/2 - 1/2
        let raw = RawPotential::new(1, vec![0.5], vec![1.0], 0.0).unwrap();
        let (p, diag) = reduce_potential(&raw);
        assert_eq!(p.delta, vec![1]);
        assert!((p.omega[0] - 1.0).abs() < 1e-12);
        assert_eq!(p.b, vec![0.0]);
        assert!((p.c + 0.5).abs() < 1e-12);
        assert!((p.origin_shift[0] + 1.0).abs() < 1e-12);
        assert!(diag.near_zero.is_empty());
    }

    #[test]
    fn reduce_diagonalizes_cross_term() {
        // V = y1*y2: eigenvalues +-1/2, 45-degree frame
        let raw = RawPotential::new(2, vec![0.0, 0.5, 0.5, 0.0], vec![0.0, 0.0], 0.0).unwrap();
        let (p, diag) = reduce_potential(&raw);
        assert_eq!(p.delta, vec![1, -1]);
        assert!((p.omega[0] - 1.0).abs() < 1e-12);
        assert!((p.omega[1] - 1.0).abs() < 1e-12);
        assert_eq!(p.b, vec![0.0, 0.0]);
        assert_eq!(p.c, 0.0);
        let mut eig = diag.eigenvalues.clone();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((eig[0] + 0.5).abs() < 1e-12 && (eig[1] - 0.5).abs() < 1e-12);
        let s = 1.0 / 2.0f64.sqrt();
        // column 0 = (1,1)/sqrt2, column 1 = (1,-1)/sqrt2 up to the sign rule
        assert!((p.frame[0] - s).abs() < 1e-12 && (p.frame[2] - s).abs() < 1e-12);
        assert!((p.frame[1].abs() - s).abs() < 1e-12 && (p.frame[3].abs() - s).abs() < 1e-12);
    }

    #[test]
    fn reduce_pure_constant_is_canonical() {
        let raw = RawPotential::new(2, vec![0.0; 4], vec![0.0, 0.0], 3.0).unwrap();
        let (p, _) = reduce_potential(&raw);
        assert_eq!(p.delta, vec![0, 0]);
        assert_eq!(p.b, vec![0.0, 0.0]);
        assert_eq!(p.c, 3.0);
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_eq!(p.frame[i * 2 + j], expect);
            }
        }
    }

    #[test]
    fn eval_examples() {
        let p = CanonicalPotential::from_axes(vec![1], vec![2.0], vec![0.0], 0.0).unwrap();
        assert_eq!(p.eval(&[1.0], false).unwrap(), 2.0);
        let p = CanonicalPotential::from_axes(vec![0], vec![1.0], vec![3.0], 0.0).unwrap();
        assert_eq!(p.eval(&[2.0], false).unwrap(), 6.0);
        let p = CanonicalPotential::from_axes(vec![-1], vec![1.0], vec![0.0], 0.0).unwrap();
        assert_eq!(p.eval(&[2.0], false).unwrap(), -2.0);
        assert!(p.eval(&[1.0, 2.0], false).is_err());
    }

    #[test]
    fn gh_examples() {
        let p = CanonicalPotential::from_axes(vec![1], vec![2.0], vec![0.0], 0.0).unwrap();
        let (g, h) = p.gh(0, std::f64::consts::FRAC_PI_4);
        assert!((g - 0.5).abs() < 1e-15 && h.abs() < 1e-15);

        let p = CanonicalPotential::free(1);
        let (g, h) = p.gh(0, 3.7);
        assert_eq!((g, h), (3.7, 1.0));

        let p = CanonicalPotential::from_axes(vec![-1], vec![1.0], vec![0.0], 0.0).unwrap();
        let (g, h) = p.gh(0, 1.0);
        assert!((g - 1.0f64.sinh()).abs() < 1e-15);
        assert!((h - 1.0f64.cosh()).abs() < 1e-15);
    }

    #[test]
    fn pythagorean_identity_sweep() {
        // h^2 + delta w^2 g^2 = 1 over the pinned parameter sweep
        for &delta in &[1i8, 0, -1] {
            for &w in &[0.5, 1.0, 2.0f64.sqrt()] {
                let p =
                    CanonicalPotential::from_axes(vec![delta], vec![w], vec![0.0], 0.0).unwrap();
                for i in 0..1000 {
                    let t = -10.0 + 20.0 * i as f64 / 999.0;
                    let (g, h) = p.gh(0, t);
                    let val = h * h + delta as f64 * w * w * g * g;
                    // cosh grows to ~7e5 at |wt|=14; identity cancellation costs ~1e-11 there
                    let tol = 1e-12 * (1.0 + h * h);
                    assert!((val - 1.0).abs() < tol, "delta={delta} w={w} t={t}: {val}");
                }
            }
        }
    }

    #[test]
    fn bicharacteristic_examples() {
        let p = CanonicalPotential::from_axes(vec![1], vec![1.0], vec![0.0], 0.0).unwrap();
        let s = PhasePoint::new(vec![1.0], vec![0.0]).unwrap();
        for &t in &[0.3, 1.7, -2.2] {
            let q = bicharacteristic(&p, &s, t).unwrap();
            assert!((q.x[0] - t.cos()).abs() < 1e-14);
            assert!((q.xi[0] + t.sin()).abs() < 1e-14);
        }

        let p = CanonicalPotential::from_axes(vec![0], vec![1.0], vec![1.0], 0.0).unwrap();
        let q = bicharacteristic(&p, &PhasePoint::origin(1), 2.0).unwrap();
        assert_eq!(q.x[0], -2.0);
        assert_eq!(q.xi[0], -2.0);

        // inverted axis pushes the particle outward: xi(1) = +sinh(1), as the
        // ODE oracle confirms
        let p = CanonicalPotential::from_axes(vec![-1], vec![1.0], vec![0.0], 0.0).unwrap();
        let s = PhasePoint::new(vec![1.0], vec![0.0]).unwrap();
        let q = bicharacteristic(&p, &s, 1.0).unwrap();
        let oracle = rk4_flow(&p, &s, 1.0, 1e-4);
        assert!((q.x[0] - 1.0f64.cosh()).abs() < 1e-12);
        assert!((q.xi[0] - 1.0f64.sinh()).abs() < 1e-12);
        assert!((q.x[0] - oracle.x[0]).abs() < 1e-8);
        assert!((q.xi[0] - oracle.xi[0]).abs() < 1e-8);
    }

    #[test]
    fn canonical_eval_matches_raw_at_random_points() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let dim = 2;
            let (a, b2, c2) = (
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            let quad = vec![a, b2, b2, c2];
            let lin = vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let gamma = rng.gen_range(-2.0..2.0);
            let raw = RawPotential::new(dim, quad, lin, gamma).unwrap();
            let (p, _) = reduce_potential(&raw);
            // frame orthogonality
            for i in 0..dim {
                for j in 0..dim {
                    let dot: f64 = (0..dim)
                        .map(|k| p.frame[k * dim + i] * p.frame[k * dim + j])
                        .sum();
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - expect).abs() < 1e-12);
                }
            }
            for _ in 0..100 {
                let y = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
                let v_raw = raw.eval(&y);
                let v_can = p.eval_original(&y).unwrap();
                assert!(
                    (v_raw - v_can).abs() < 1e-10 * (1.0 + v_raw.abs()),
                    "{v_raw} vs {v_can}"
                );
            }
        }
    }

    #[test]
    fn eigenvalues_match_half_delta_omega_sq() {
        let raw = RawPotential::new(2, vec![0.0, 0.5, 0.5, 0.0], vec![0.0, 0.0], 0.0).unwrap();
        let (p, diag) = reduce_potential(&raw);
        let mut from_canon: Vec<f64> = (0..2).map(|j| 0.5 * p.spring(j)).collect();
        let mut eig = diag.eigenvalues.clone();
        from_canon.sort_by(|a, b| a.partial_cmp(b).unwrap());
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in from_canon.iter().zip(&eig) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        /// Closed-form flow vs fixed-step RK4 oracle, absolute 1e-8.
        /// For inverted axes |omega*t| is capped at 8 to keep the trajectory
        /// magnitude within the tolerance's reach (cosh(8) ~ 1.5e3).
        #[test]
        fn bicharacteristic_matches_rk4(
            delta in prop::sample::select(vec![-1i8, 0, 1]),
            omega in 0.5f64..1.5,
            bval in -1.0f64..1.0,
            x0 in -2.0f64..2.0,
            xi0 in -2.0f64..2.0,
            tq in -1.0f64..1.0,
        ) {
            let b = if delta == 0 { bval } else { 0.0 };
            let t_max = if delta == -1 { 8.0 / omega } else { 10.0 };
            let t = tq * t_max;
            let p = CanonicalPotential::from_axes(vec![delta], vec![omega], vec![b], 0.0).unwrap();
            let s = PhasePoint::new(vec![x0], vec![xi0]).unwrap();
            let exact = bicharacteristic(&p, &s, t).unwrap();
            let oracle = rk4_flow(&p, &s, t, 1e-4);
            prop_assert!((exact.x[0] - oracle.x[0]).abs() < 1e-8);
            prop_assert!((exact.xi[0] - oracle.xi[0]).abs() < 1e-8);
        }

        /// Group property flow(t+s) = flow at t then s, b = 0.
        #[test]
        fn bicharacteristic_group_property(
            delta in prop::sample::select(vec![-1i8, 0, 1]),
            omega in 0.5f64..2.0,
            x0 in -2.0f64..2.0,
            xi0 in -2.0f64..2.0,
            t in -3.0f64..3.0,
            s in -3.0f64..3.0,
        ) {
            let p = CanonicalPotential::from_axes(vec![delta], vec![omega], vec![0.0], 0.0).unwrap();
            let start = PhasePoint::new(vec![x0], vec![xi0]).unwrap();
            let direct = bicharacteristic(&p, &start, t + s).unwrap();
            let mid = bicharacteristic(&p, &start, t).unwrap();
            let two_step = bicharacteristic(&p, &mid, s).unwrap();
            let scale = 1.0 + direct.x[0].abs().max(direct.xi[0].abs());
            prop_assert!((direct.x[0] - two_step.x[0]).abs() < 1e-10 * scale);
            prop_assert!((direct.xi[0] - two_step.xi[0]).abs() < 1e-10 * scale);
        }
    }
}
