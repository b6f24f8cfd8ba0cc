//! Semiclassical nonlinear Schrödinger laboratory.
//!
//! The crate implements, at desk scale, the machinery around the semiclassical
//! defocusing NLS with a generalized quadratic potential:
//!
//! ```text
//! i eps d_t u + eps^2/2 Laplacian u = V(x) u + eps^(n sigma) |u|^(2 sigma) u,
//! u(0,x) = eps^(-n/2) phi(x/eps),
//! ```
//!
//! together with the exact algebra that makes this potential class special:
//! canonical reduction of degree-two potentials, closed-form bicharacteristics,
//! Heisenberg observables with their phase factorizations, gauge transforms,
//! the dispersion factor, nonlinear scattering states of the unit-scale
//! reference equation, and a declarative experiment harness that measures the
//! two-régime asymptotics (nonlinear profile inside an O(eps) layer, linear
//! evolution of scattering data beyond it).
//!
//! Entry points:
//! - [`potential`]: potential algebra and classical flows,
//! - [`spectral`] / [`grid`]: periodic grids, FFT calculus, norms,
//! - [`gauge`]: moving-frame and Stark transforms,
//! - [`observables`]: Heisenberg observables and dispersion diagnostics,
//! - [`propagate`]: Strang split-step evolution and conserved quantities,
//! - [`scattering`]: asymptotic states of the reference equation,
//! - [`harness`]: experiment configs, runners, CSV/JSON reports.
//!
//! The `scnls` binary exposes one subcommand per experiment; the `examples/`
//! directory demonstrates each capability in isolation.

pub mod error;
pub mod field_io;
pub mod gauge;
pub mod grid;
pub mod harness;
pub mod observables;
pub mod potential;
pub mod profile;
pub mod propagate;
pub mod scattering;
pub mod spectral;

pub use error::{Result, ScnlsError};
pub use grid::{Grid, SigmaTriple, WaveField};
pub use potential::{
    bicharacteristic, reduce_potential, CanonicalPotential, PhasePoint, RawPotential,
};
