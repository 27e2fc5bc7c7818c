//! Numerical toolkit for modified n-cycle (KCBS-type) noncontextuality
//! inequalities in the sequential-measurement scenario.
//!
//! The crate builds the inequality operators together with their
//! sum-of-squares certificates, verifies classical and quantum bounds at
//! desk scale, simulates the two-measurement sequential protocol, and runs
//! the constructive self-testing extraction that certifies a realization
//! as unitarily equivalent to the canonical qutrit one.
//!
//! Modules:
//! - [`numerics`]: small dense complex linear algebra (eigendecomposition,
//!   PSD square roots, orthonormalization) plus the JSON wire format.
//! - [`coefficients`]: closed-form scalars of the construction for
//!   `n = 2^m + 1`.
//! - [`realization`]: the canonical qutrit state and effects, stabilizer
//!   operators, and embeddings into larger spaces.
//! - [`operators`]: the inequality operators and their SOS certificates.
//! - [`classical`]: exact classical bounds by exhaustive ±1 assignment.
//! - [`sequential`]: the preparation → two-sequential-measurements
//!   protocol, exact and sampled.
//! - [`selftest`]: the extraction pipeline producing a pass/fail
//!   certificate of unitary equivalence to the canonical realization.
//! - [`seesaw`]: alternating variational optimization confirming the
//!   quantum bound is attainable.

pub mod classical;
pub mod coefficients;
pub mod numerics;
pub mod operators;
pub mod realization;
pub mod seesaw;
pub mod selftest;
pub mod sequential;

use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: asymmetry {asymmetry:.3e} exceeds {tol:.3e}")]
    NotHermitian { asymmetry: f64, tol: f64 },
    #[error("eigensolver did not converge within the iteration cap")]
    NoConvergence,
    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:.3e}")]
    NotPsd { eigenvalue: f64 },
    #[error("n = {n} is not supported: {reason}")]
    BadN { n: usize, reason: &'static str },
    #[error("k = {k} is out of range 1..={max}")]
    BadK { k: usize, max: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("effect out of range: eigenvalue {eigenvalue:.6e} outside [0, 1]")]
    EffectOutOfRange { eigenvalue: f64 },
    #[error("enumeration over 2^{n} assignments exceeds the budget (n > {max})")]
    TooLarge { n: usize, max: usize },
    #[error("statistics table is missing context ({first}, {second})")]
    MissingContext { first: usize, second: usize },
    #[error("matrix is not unitary: defect {0:.3e}")]
    NotUnitary(f64),
    #[error("singular stabilizer system: |sin(phi_k)| = {0:.3e}")]
    Singular(f64),
    #[error("invariant subspace is degenerate: dimension {dim} < 3")]
    DegenerateSubspace { dim: usize },
    #[error("projected realization violates optimality conditions: residual {residual:.3e} at {which}")]
    ConditionViolation { residual: f64, which: String },
    #[error("projected effect {index} is not rank one: top eigenvalue {top:.6}, gap {gap:.3e}")]
    NotRankOne { index: usize, top: f64, gap: f64 },
    #[error("overlap for vector {index} deviates from the certified geometry by {deviation:.3e}")]
    OverlapMismatch { index: usize, deviation: f64 },
    #[error("imaginary parts of size {0:.3e} persist after phase fixing")]
    PhaseResidual(f64),
    #[error("invalid realization: {0}")]
    InvalidRealization(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
