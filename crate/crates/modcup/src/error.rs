//! Error types shared across the crate.

use thiserror::Error;

/// Everything that can go wrong in the numerical pipeline.
#[derive(Debug, Error)]
pub enum McError {
    /// Gamma function evaluated at a non-positive integer.
    #[error("gamma pole at x = {x}")]
    GammaPole { x: f64 },

    /// A parameter fell outside the documented domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// cpow(0, s) with s <= 0.
    #[error("zero base with non-positive exponent {s}")]
    ZeroPower { s: f64 },

    /// A Pochhammer factor (r)_n vanished where a division by it is required.
    #[error("pochhammer pole: (r)_n = 0 for r = {r}, n = {n}")]
    PochhammerPole { r: f64, n: u32 },

    /// Adaptive quadrature exhausted its panel budget.
    #[error("quadrature did not converge: {panels} panels, est. error {err:.3e} > tol {tol:.3e}")]
    QuadratureNonConvergence { panels: usize, err: f64, tol: f64 },

    /// Sampled integrand violates the claimed exponential decay.
    #[error("decay violation: {0}")]
    DecayViolation(String),

    /// A q-expansion truncation is too short for the requested tolerance.
    #[error("truncation insufficient: tail bound {bound:.3e} > tol {tol:.3e}")]
    TruncationInsufficient { bound: f64, tol: f64 },

    /// A series failed its convergence-ratio precondition.
    #[error("series divergence: {0}")]
    Divergence(String),

    /// A singular value sits too close to the rank-decision threshold.
    #[error("rank threshold ambiguous: singular value {sv:.3e} within 1e3 of threshold {thr:.3e}")]
    ThresholdAmbiguity { sv: f64, thr: f64 },

    /// Multiplier-system word rejected (real-weight systems are not characters).
    #[error("multiplier system: {0}")]
    Multiplier(String),

    /// Invalid run parameter (CLI level).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type McResult<T> = Result<T, McError>;
