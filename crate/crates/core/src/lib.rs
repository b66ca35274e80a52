//! Numerical toolkit for symplectic geometry and completely integrable systems.
//!
//! The crate has three strands:
//!
//! * [`maslov`] — the Lagrangian Grassmannian U(n)/O(n), the squared-determinant
//!   circle map and winding-number Maslov indices of sampled loops of Lagrangian
//!   planes;
//! * [`poisson`], [`lie`], [`projtori`], [`homog`] — a Poisson-geometry engine
//!   (canonical and Dirac brackets, involution matrices, independence ranks,
//!   Hamiltonian flows) applied to two families of integrable systems: the
//!   commuting integrals of projectively equivalent model metrics on tori, and
//!   bi-invariant-metric Hamiltonians on homogeneous 7-manifolds built from
//!   momentum maps and argument-shift families;
//! * [`topo7`] — integer arithmetic classifiers for Eschenburg quartets and
//!   Witten-Kreck-Stolz pairs, with the embedded reference table.
//!
//! The [`cli`] module exposes every verification report through a spec-file
//! driven command line; see the README for usage.

pub mod cli;
pub mod config;
pub mod homog;
pub mod lie;
pub mod linalg;
pub mod maslov;
pub mod poisson;
pub mod projtori;
pub mod report;
pub mod topo7;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("frame is not unitary (defect {defect:.3e} exceeds {tol:.3e})")]
    NonUnitaryFrame { defect: f64, tol: f64 },
    #[error("loop sampling too coarse: phase step {step:.4} rad at sample {index} (guard {guard:.4})")]
    SamplingTooCoarse { index: usize, step: f64, guard: f64 },
    #[error("degenerate crossing of dimension {dim} at sample {index}")]
    DegenerateCrossing { index: usize, dim: usize },
    #[error("crossing at endpoint sample; resample the loop with an offset")]
    ResampleRequired,
    #[error("loop is not closed: endpoint planes differ")]
    LoopNotClosed,
    #[error("point violates constraints (residual {residual:.3e} exceeds {tol:.3e})")]
    OffManifold { residual: f64, tol: f64 },
    #[error("constraint bracket matrix is singular at the given point")]
    ConstraintDegeneracy,
    #[error("singular parameter: {0}")]
    SingularParameter(String),
    #[error("coincident nodes in interpolation data")]
    CoincidentNodes,
    #[error("no real solution: coefficient {index} is negative ({value:.3e})")]
    NoRealSolution { index: usize, value: f64 },
    #[error("spanning set is rank deficient (rank {rank} < {expected})")]
    RankDeficient { rank: usize, expected: usize },
    #[error("non-finite value encountered in {0}")]
    NonFinite(String),
    #[error("energy drift {drift:.3e} exceeded bound {bound:.3e} at step {step}")]
    EnergyDrift { step: usize, drift: f64, bound: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("search failed: {0}")]
    SearchExhausted(String),
}

pub type Result<T> = std::result::Result<T, Error>;
