//! Error taxonomy shared by every module in this crate.
//!
//! Numerical routines return `Result<_, Error>` rather than panicking: a rejected
//! parameter set, a singular linear solve, or a diverging trajectory are expected
//! outcomes that callers must be able to inspect, report, and map to exit codes.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Every failure mode surfaced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A grid was requested with too few nodes to support the discrete operators.
    #[error("grid needs at least {min} nodes, got {n}")]
    GridTooSmall { n: usize, min: usize },

    /// Two discrete objects live on grids of different size.
    #[error("grid mismatch: {left} vs {right} nodes")]
    GridMismatch { left: usize, right: usize },

    /// A scalar parameter violates its documented admissible range.
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: String,
    },

    /// γ sits too close to an eigenvalue −(nπ)² of the Neumann Laplacian, where
    /// the elliptic resolvent (γ − ∂ₓₓ)⁻¹ is singular.
    #[error("gamma = {gamma} is within {distance:.3e} of -(n*pi)^2 for n = {n}; the elliptic solve is singular there")]
    Resonance { gamma: f64, n: usize, distance: f64 },

    /// The kernel fixed-point iteration stalled above its residual tolerance.
    #[error("kernel iteration did not converge: residual {residual:.3e} after {iterations} sweeps")]
    KernelNonConvergence { iterations: usize, residual: f64 },

    /// A direct linear solve hit a pivot too small to divide by safely.
    #[error("linear solve hit a near-zero pivot ({pivot:.3e})")]
    SingularSolve { pivot: f64 },

    /// A trajectory crossed the blow-up guard and was abandoned.
    #[error("trajectory diverged at t = {t}: state norm {norm:.3e} exceeded the blow-up guard")]
    Divergence { t: f64, norm: f64 },

    /// A NaN or infinity appeared where a finite number was required.
    #[error("non-finite value encountered in {context}")]
    NonFinite { context: String },

    /// A least-squares fit was requested on fewer points than it needs.
    #[error("fit needs at least {need} samples, got {have}")]
    TooFewSamples { have: usize, need: usize },

    /// The decay-fit input cannot support a meaningful exponential fit.
    #[error("degenerate decay fit: {reason}")]
    DegenerateFit { reason: String },

    /// The empirical slope audit of a nonlinearity exceeded its declared bound.
    #[error("nonlinearity slope audit failed: sampled slope {observed:.6e} exceeds declared bound {claimed:.6e}")]
    LipschitzViolation { claimed: f64, observed: f64 },

    /// Underlying I/O failure while reading or writing CSV output.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
