//! Experiment configuration: a flat, JSON-compatible key-value file whose
//! keys match the struct fields exactly. Unknown keys are rejected; omitted
//! keys take the experiment's desk-scale defaults. The resolved config
//! round-trips through serialization bit-exactly, and its canonical JSON is
//! hashed into every output row.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, ScnlsError};
use crate::grid::{Grid, RES_FACTOR};
use crate::potential::{reduce_potential, CanonicalPotential, RawPotential, ReductionDiagnostics};
use crate::propagate::{validate_sigma, GeneralPotential};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    InsideLayer,
    BeyondLayer,
    Matching,
    MovingFrame,
    GeneralSubquadratic,
    ConservationSuite,
    RigidityDemo,
    DispersionSuite,
}

impl ExperimentKind {
    pub fn all() -> [ExperimentKind; 8] {
        use ExperimentKind::*;
        [
            ConservationSuite,
            RigidityDemo,
            DispersionSuite,
            MovingFrame,
            InsideLayer,
            Matching,
            BeyondLayer,
            GeneralSubquadratic,
        ]
    }

    pub fn as_str(&self) -> &'static str {
        use ExperimentKind::*;
        match self {
            InsideLayer => "inside_layer",
            BeyondLayer => "beyond_layer",
            Matching => "matching",
            MovingFrame => "moving_frame",
            GeneralSubquadratic => "general_subquadratic",
            ConservationSuite => "conservation_suite",
            RigidityDemo => "rigidity_demo",
            DispersionSuite => "dispersion_suite",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        use ExperimentKind::*;
        Ok(match s {
            "inside_layer" => InsideLayer,
            "beyond_layer" => BeyondLayer,
            "matching" => Matching,
            "moving_frame" => MovingFrame,
            "general_subquadratic" => GeneralSubquadratic,
            "conservation_suite" => ConservationSuite,
            "rigidity_demo" => RigidityDemo,
            "dispersion_suite" => DispersionSuite,
            other => {
                return Err(ScnlsError::Config(format!(
                    "unknown experiment kind '{other}'"
                )))
            }
        })
    }
}

fn default_true() -> bool {
    true
}

/// Flat experiment configuration. Every field has a default so that a config
/// file may specify only what it overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,

    // grid
    #[serde(default = "defaults::dim")]
    pub dim: usize,
    #[serde(default = "defaults::grid_n")]
    pub grid_n: usize,
    #[serde(default = "defaults::grid_half_width")]
    pub grid_half_width: f64,

    // potential: canonical lists, or a raw (matrix, vector, scalar) triple
    #[serde(default = "defaults::potential_kind")]
    pub potential_kind: String,
    #[serde(default)]
    pub potential_delta: Vec<i8>,
    #[serde(default)]
    pub potential_omega: Vec<f64>,
    #[serde(default)]
    pub potential_b: Vec<f64>,
    #[serde(default)]
    pub potential_c: f64,
    #[serde(default)]
    pub potential_quad: Vec<f64>,
    #[serde(default)]
    pub potential_lin: Vec<f64>,
    #[serde(default)]
    pub potential_const: f64,
    /// Named preset for the general-subquadratic and rigidity paths.
    #[serde(default)]
    pub general_potential: String,

    // nonlinearity and data
    #[serde(default = "defaults::sigma")]
    pub sigma: f64,
    #[serde(default = "defaults::one")]
    pub profile_width: f64,
    #[serde(default = "defaults::one")]
    pub profile_amplitude: f64,
    #[serde(default = "default_true")]
    pub nonlinearity_on: bool,
    #[serde(default)]
    pub small_data: bool,

    // sweeps
    #[serde(default = "defaults::eps_list")]
    pub eps_list: Vec<f64>,
    #[serde(default = "defaults::lambda_list")]
    pub lambda_list: Vec<f64>,
    #[serde(default = "defaults::t_final")]
    pub t_final: f64,
    #[serde(default = "defaults::snapshot_count")]
    pub snapshot_count: usize,

    // stepper
    #[serde(default)]
    pub dt_override: Option<f64>,

    // scattering (beyond-layer inputs)
    #[serde(default = "defaults::scattering_t_ref")]
    pub scattering_t_ref: f64,
    #[serde(default = "defaults::scattering_tol")]
    pub scattering_tol: f64,
    #[serde(default = "defaults::scattering_grid_n")]
    pub scattering_grid_n: usize,
    #[serde(default = "defaults::scattering_half_width")]
    pub scattering_half_width: f64,
    #[serde(default = "defaults::scattering_dt")]
    pub scattering_dt: f64,

    // rigidity demo
    #[serde(default = "defaults::rigidity_dt_list")]
    pub rigidity_dt_list: Vec<f64>,
    #[serde(default = "defaults::rigidity_time")]
    pub rigidity_time: f64,

    // moving frame
    #[serde(default)]
    pub frame_x0: Vec<f64>,
    #[serde(default)]
    pub frame_xi0: Vec<f64>,

    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::out_dir")]
    pub out_dir: String,
}

mod defaults {
    pub fn dim() -> usize {
        1
    }
    pub fn grid_n() -> usize {
        4096
    }
    pub fn grid_half_width() -> f64 {
        8.0
    }
    pub fn potential_kind() -> String {
        "canonical".into()
    }
    pub fn sigma() -> f64 {
        2.0
    }
    pub fn one() -> f64 {
        1.0
    }
    pub fn eps_list() -> Vec<f64> {
        vec![0.125, 0.0625, 0.03125]
    }
    pub fn lambda_list() -> Vec<f64> {
        vec![1.0, 2.0, 4.0]
    }
    pub fn t_final() -> f64 {
        0.8
    }
    pub fn snapshot_count() -> usize {
        8
    }
    pub fn scattering_t_ref() -> f64 {
        16.0
    }
    pub fn scattering_tol() -> f64 {
        1e-4
    }
    pub fn scattering_grid_n() -> usize {
        2048
    }
    pub fn scattering_half_width() -> f64 {
        120.0
    }
    pub fn scattering_dt() -> f64 {
        5e-3
    }
    pub fn rigidity_dt_list() -> Vec<f64> {
        vec![0.01, 0.005, 0.0025]
    }
    pub fn rigidity_time() -> f64 {
        0.5
    }
    pub fn out_dir() -> String {
        "out".into()
    }
}

/// Desk-scale default configuration per experiment kind. The shared default
/// (1D, sigma = 2, Gaussian data, eps in {1/8, 1/16, 1/32}, lambda in
/// {1, 2, 4}, N = 4096, L = 8, T = 0.8) satisfies every hypothesis of the
/// two-régime theorem; kinds that need different grids override it.
pub fn default_config(kind: ExperimentKind) -> ExperimentConfig {
    let base = ExperimentConfig {
        experiment: kind,
        dim: 1,
        grid_n: 4096,
        grid_half_width: 8.0,
        potential_kind: "canonical".into(),
        potential_delta: vec![-1],
        potential_omega: vec![1.0],
        potential_b: vec![0.0],
        potential_c: 0.0,
        potential_quad: vec![],
        potential_lin: vec![],
        potential_const: 0.0,
        general_potential: String::new(),
        sigma: 2.0,
        profile_width: 1.0,
        profile_amplitude: 1.0,
        nonlinearity_on: true,
        small_data: false,
        eps_list: vec![0.125, 0.0625, 0.03125],
        lambda_list: vec![1.0, 2.0, 4.0],
        t_final: 0.8,
        snapshot_count: 8,
        dt_override: None,
        scattering_t_ref: 16.0,
        scattering_tol: 1e-4,
        scattering_grid_n: 2048,
        scattering_half_width: 120.0,
        scattering_dt: 5e-3,
        rigidity_dt_list: vec![0.01, 0.005, 0.0025],
        rigidity_time: 0.5,
        frame_x0: vec![],
        frame_xi0: vec![],
        seed: 0,
        out_dir: "out".into(),
    };
    match kind {
        ExperimentKind::InsideLayer => ExperimentConfig {
            lambda_list: vec![2.0],
            ..base
        },
        ExperimentKind::BeyondLayer | ExperimentKind::Matching => ExperimentConfig {
            // scattering must converge at the certified tolerance; moderate
            // amplitude and a long pullback keep the Cauchy tail below it
            profile_amplitude: 0.25,
            scattering_t_ref: 24.0,
            scattering_tol: 2e-3,
            scattering_grid_n: 4096,
            scattering_half_width: 240.0,
            ..base
        },
        ExperimentKind::MovingFrame => ExperimentConfig {
            potential_delta: vec![1],
            t_final: 1.0,
            eps_list: vec![0.125],
            frame_x0: vec![1.0],
            frame_xi0: vec![0.0],
            ..base
        },
        ExperimentKind::GeneralSubquadratic => ExperimentConfig {
            general_potential: "half_x2_cos_t".into(),
            lambda_list: vec![2.0],
            ..base
        },
        ExperimentKind::ConservationSuite => ExperimentConfig {
            potential_delta: vec![1],
            grid_n: 1024,
            eps_list: vec![0.125],
            t_final: 1.0,
            ..base
        },
        ExperimentKind::RigidityDemo => ExperimentConfig {
            potential_delta: vec![1],
            grid_n: 1024,
            grid_half_width: 6.0,
            general_potential: "quartic_quarter".into(),
            eps_list: vec![0.25],
            ..base
        },
        ExperimentKind::DispersionSuite => ExperimentConfig {
            dim: 2,
            grid_n: 512,
            grid_half_width: 4.0,
            potential_delta: vec![1, 1],
            potential_omega: vec![1.0, 2.0f64.sqrt()],
            potential_b: vec![0.0, 0.0],
            profile_width: 2.0,
            eps_list: vec![0.25, 0.125, 0.0625],
            t_final: std::f64::consts::PI,
            ..base
        },
    }
}

/// Canonical potential echo written into every summary.
#[derive(Debug, Clone, Serialize)]
pub struct CanonicalEcho {
    pub delta: Vec<i8>,
    pub omega: Vec<f64>,
    pub b: Vec<f64>,
    pub c: f64,
    pub origin_shift: Vec<f64>,
    pub frame: Vec<f64>,
    pub reduction: Option<ReductionDiagnostics>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        Ok(cfg)
    }

    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 over the canonical JSON, hex-encoded (first 16 chars used in paths).
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.to_canonical_json().as_bytes());
        let digest = h.finalize();
        let mut s = String::with_capacity(64);
        for b in digest {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.dim, self.grid_n, self.grid_half_width)
    }

    /// Resolve the potential declaration (canonical lists or raw triple) into
    /// the canonical form plus reduction diagnostics for the echo.
    pub fn potential(&self) -> Result<(CanonicalPotential, CanonicalEcho)> {
        match self.potential_kind.as_str() {
            "canonical" => {
                let p = CanonicalPotential::from_axes(
                    self.potential_delta.clone(),
                    self.potential_omega.clone(),
                    self.potential_b.clone(),
                    self.potential_c,
                )?;
                if p.dim != self.dim {
                    return Err(ScnlsError::Config(format!(
                        "potential dim {} != grid dim {}",
                        p.dim, self.dim
                    )));
                }
                let echo = CanonicalEcho {
                    delta: p.delta.clone(),
                    omega: p.omega.clone(),
                    b: p.b.clone(),
                    c: p.c,
                    origin_shift: p.origin_shift.clone(),
                    frame: p.frame.clone(),
                    reduction: None,
                };
                Ok((p, echo))
            }
            "raw" => {
                let raw = RawPotential::new(
                    self.dim,
                    self.potential_quad.clone(),
                    self.potential_lin.clone(),
                    self.potential_const,
                )?;
                let (p, diag) = reduce_potential(&raw);
                let echo = CanonicalEcho {
                    delta: p.delta.clone(),
                    omega: p.omega.clone(),
                    b: p.b.clone(),
                    c: p.c,
                    origin_shift: p.origin_shift.clone(),
                    frame: p.frame.clone(),
                    reduction: Some(diag),
                };
                Ok((p, echo))
            }
            other => Err(ScnlsError::Config(format!(
                "potential_kind must be 'canonical' or 'raw', got '{other}'"
            ))),
        }
    }

    pub fn general_potential(&self) -> Result<GeneralPotential> {
        GeneralPotential::by_name(&self.general_potential)
    }

    /// Load-time validation: grid, sigma admissibility, potential hypotheses,
    /// per-eps resolution, and (for the general path) closure consistency and
    /// the V(0,0) = 0 hypothesis.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut notes = Vec::new();
        let grid = self.grid()?;
        validate_sigma(self.dim, self.sigma, self.small_data)?;
        if self.small_data {
            notes.push("small-data route enabled: sigma lower bound relaxed".into());
        }
        if self.eps_list.is_empty() {
            return Err(ScnlsError::Config("eps_list must be nonempty".into()));
        }
        for &eps in &self.eps_list {
            if !(eps > 0.0) {
                return Err(ScnlsError::Config(format!("eps must be positive: {eps}")));
            }
            let limit = eps * RES_FACTOR;
            for a in 0..grid.dim() {
                if grid.dx(a) > limit * (1.0 + 1e-12) {
                    return Err(ScnlsError::UnderResolved {
                        eps,
                        dx: grid.dx(a),
                        limit,
                    });
                }
            }
        }
        let (p, _) = self.potential()?;
        // two-régime hypotheses: some delta_j != 1, or incommensurate trapped
        // frequencies; in 1D a fully trapped axis is allowed only inside a
        // single-focus window
        let all_trapped = p.delta.iter().all(|&d| d == 1);
        if all_trapped {
            match self.dim {
                1 => {
                    let window = std::f64::consts::PI / p.omega[0];
                    if self.t_final < window
                        || matches!(
                            self.experiment,
                            ExperimentKind::DispersionSuite | ExperimentKind::MovingFrame
                        )
                    {
                        notes.push(format!(
                            "1D fully trapped potential: run restricted to a single-focus window (T < {window:.4}); the full two-régime statement excludes this case"
                        ));
                    } else {
                        return Err(ScnlsError::Config(format!(
                            "1D fully trapped potential requires t_final < pi/omega = {window:.4}"
                        )));
                    }
                }
                _ => {
                    let w = &p.omega;
                    let ratio = w[0] / w[1];
                    let near_rational = (1..=12).any(|q| {
                        let pnum = (ratio * q as f64).round();
                        (ratio - pnum / q as f64).abs() < 1e-9
                    });
                    if near_rational {
                        return Err(ScnlsError::Config(
                            "fully trapped potential with (numerically) rationally dependent frequencies violates the incommensurability hypothesis".into(),
                        ));
                    }
                }
            }
        }
        if matches!(
            self.experiment,
            ExperimentKind::GeneralSubquadratic | ExperimentKind::RigidityDemo
        ) {
            let gp = self.general_potential()?;
            gp.validate_on(&grid, &[0.0, 0.5 * self.t_final, self.t_final])?;
            if self.experiment == ExperimentKind::GeneralSubquadratic {
                let v00 = (gp.v)(0.0, &vec![0.0; self.dim]);
                if v00.abs() > 1e-12 {
                    return Err(ScnlsError::Config(format!(
                        "general potential must vanish at (t,x) = (0,0); got {v00}"
                    )));
                }
            }
        }
        if matches!(self.experiment, ExperimentKind::MovingFrame) {
            if p.has_stark_term() {
                return Err(ScnlsError::NonzeroStarkTerm);
            }
            if self.frame_x0.len() != self.dim || self.frame_xi0.len() != self.dim {
                return Err(ScnlsError::Config(
                    "frame_x0/frame_xi0 must match the dimension".into(),
                ));
            }
        }
        if !self.nonlinearity_on {
            notes.push("sanity mode: nonlinearity off".into());
        }
        Ok(notes)
    }

    /// Quick mode: halve the grid and truncate the eps sweep to its first
    /// (largest) half, for smoke tests.
    pub fn quick(mut self) -> Self {
        self.grid_n = (self.grid_n / 2).max(64);
        let keep = self.eps_list.len().div_ceil(2);
        self.eps_list.truncate(keep.max(1));
        self
    }
}
