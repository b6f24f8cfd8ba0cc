//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScnlsError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("grid size {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("grid does not resolve scale eps={eps}: dx={dx} exceeds eps*res_factor={limit}")]
    UnderResolved { eps: f64, dx: f64, limit: f64 },

    #[error("factored observable undefined at t={t}: |{coeff}|={value} below tol_sing={tol}")]
    SingularTime {
        t: f64,
        coeff: &'static str,
        value: f64,
        tol: f64,
    },

    #[error("moving-frame transform requires a potential without linear term (b = 0)")]
    NonzeroStarkTerm,

    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    #[error("sigma={sigma} not admissible for dim={dim}: {reason}")]
    NonAdmissibleSigma {
        sigma: f64,
        dim: usize,
        reason: String,
    },

    #[error("non-finite field detected at step {step} (t={t})")]
    NanDetected { step: usize, t: f64 },

    #[error("scattering state did not converge: cauchy_tail={tail} > tol={tol}")]
    ScatteringNotConverged { tail: f64, tol: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ScnlsError>;
