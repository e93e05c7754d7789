//! Numerical laboratory for sharp Hardy-type inequalities on radial Dirac
//! channels.
//!
//! The crate builds the iterated-logarithm tower `X_k`, the optimal
//! logarithmic potentials generated by multiplier functions, solves the
//! singular multiplier ODE at the origin by contraction mapping, performs the
//! Dirac/Laplace change of variables, and verifies the sharp inequalities on
//! discretized radial channels.
//!
//! Modules map onto the main mathematical objects:
//!
//! * [`tower`] — `X_k`, products `pi_k`, sums `sigma_k`, the optimal
//!   potential `W_inf` and the multiplier generator `nbar`.
//! * [`potential`] — multiplier-generated potentials `W^{±,m}`, the explicit
//!   constructions `W1`, `W2`, `W3`, pointwise admissibility and the
//!   threshold `T`.
//! * [`ode`] — the singular initial value problem for the multiplier at the
//!   origin, solved by Picard iteration in a weighted class.
//! * [`transform`] — the change of variables linking the Dirac-side radial
//!   inequality to the Laplace-side one, plus the telescoping substitution
//!   chain.
//! * [`forms`] — discretized quadratic forms, Rayleigh quotients and the
//!   inequality verifier suite.
//! * [`counterexample`] — bump perturbations of the optimal potential for
//!   which no multiplier continuous at the origin exists.

pub mod bump;
pub mod counterexample;
pub mod eigen;
pub mod forms;
pub mod grid;
pub mod ode;
pub mod potential;
pub mod quad;
pub mod tower;
pub mod transform;

pub use grid::GridFunction;
pub use potential::Potential;
pub use tower::LogTower;

/// Errors shared across the numerical modules.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("argument s = {s} outside the domain (0, {domain_end})")]
    Domain { s: f64, domain_end: f64 },
    #[error("tower depth {k} exceeds max_depth {max_depth}")]
    Depth { k: usize, max_depth: usize },
    #[error("series did not meet the tail bound within max_depth = {max_depth}")]
    NonConvergence { max_depth: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no sign change in bracket [{lo}, {hi}]")]
    BracketFailure { lo: f64, hi: f64 },
    #[error("Picard iteration failed to contract after {attempts} interval reductions")]
    ContractionFailure { attempts: usize },
    #[error("potential requires an attached ODE solution")]
    MissingOdeSolution,
    #[error("inversion target y = {y} outside the mapped range")]
    InversionRange { y: f64 },
    #[error("test function must vanish at the grid boundary (|v| = {value:.3e} at r = {r:.3e})")]
    SupportViolation { r: f64, value: f64 },
    #[error("tail integral did not converge for the supplied potential")]
    TailDivergence,
    #[error("jump radius {r} is not a grid node")]
    JumpOffGrid { r: f64 },
    #[error("grid must be strictly increasing and positive")]
    BadGrid,
    #[error("eigenvalue solve failed: {0}")]
    Eigen(String),
}

pub type Result<T> = std::result::Result<T, Error>;
