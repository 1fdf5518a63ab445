//! Spectral solver for the free Schrödinger equation on a 2D rectangle or 3D
//! cuboid that is periodic in the transverse directions and unbounded along
//! the first axis.  The two open walls carry discrete transparent /
//! absorbing boundary maps so that outgoing waves leave the computational
//! window without reflecting back in.
//!
//! The crate is organized bottom-up:
//!
//! * [`specfun`] — Legendre/Hermite evaluation, Legendre-Gauss-Lobatto grids,
//!   discrete Legendre and Fourier transforms;
//! * [`ratapprox`] — diagonal rational (Padé) approximation of the square
//!   root and the Robin constants derived from it;
//! * [`convquad`] — convolution-quadrature weights for half-order time
//!   derivatives;
//! * [`tbc_maps`] — the per-step boundary maps (convolution quadrature,
//!   novel Padé, conventional Padé, high-frequency) for both one-step
//!   methods;
//! * [`galerkin`] — boundary-adapted Legendre bases, liftings, banded
//!   per-mode systems and their LU solver;
//! * [`exact`] — closed-form reference solutions (chirped Gaussian and
//!   Hermite-Gaussian wave packets) and their presets;
//! * [`evolve`] — domain/time descriptors and the time-stepping solver;
//! * [`harness`] — run configuration, error metrics, convergence sweeps and
//!   file output used by the `schrotbc` binary.

pub mod convquad;
pub mod evolve;
pub mod exact;
pub mod galerkin;
pub mod harness;
pub mod ratapprox;
pub mod specfun;
pub mod tbc_maps;

pub use num_complex::Complex64 as C64;

/// Errors surfaced by the numerical kernels and the run harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller passed data whose shape or value violates an operation's
    /// contract (wrong lengths, odd Fourier size, zero norm, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Newton iteration for the Lobatto nodes failed to converge.
    #[error("root finding failed: {0}")]
    RootFinding(String),

    /// A rational approximation was evaluated at (or near) one of its poles.
    #[error("pole encountered: {0}")]
    Pole(String),

    /// A basis or lifting construction hit a singular parameter value.
    #[error("singular construction: {0}")]
    Singular(String),

    /// A banded or dense linear solve failed (zero pivot) or verified badly.
    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    /// The time integration produced non-finite values.
    #[error("non-finite field at step {step}")]
    NonFinite { step: usize },

    /// The field norm grew past the instability threshold.
    #[error("instability detected at step {step}: norm ratio {ratio:.3e}")]
    Unstable { step: usize, ratio: f64 },

    /// The run configuration is malformed or inconsistent.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
