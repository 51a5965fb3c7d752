//! Error types shared across the crate.

use alloc::string::String;

/// Errors produced by geometry, dynamics, and estimator operations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An input violates a structural precondition (bad index, state off
    /// the manifold, mismatched histogram edges, ...).
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// No scatterer was hit within the table's free-flight cap. Signals an
    /// unbounded horizon (or a cap that is too small for the geometry).
    #[error("no collision within sigma_cap = {cap}")]
    NoCollisionWithinCap { cap: f64 },

    /// The operation is only defined in a regime the inputs do not satisfy
    /// (e.g. equilibrium-only estimators on mixed-temperature tables).
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),
}

pub type Result<T> = core::result::Result<T, Error>;
