//! Tolerances and integrator settings.
//!
//! Every threshold used by the verification operations is collected here with
//! its default value; the CLI can override individual fields per run.

use serde::{Deserialize, Serialize};

/// Relative singular-value cutoff for all numerical rank decisions.
pub const RANK_REL_THRESHOLD: f64 = 1e-7;

/// Central finite-difference step scale: h = FD_STEP * max(1, |p_i|).
pub const FD_STEP: f64 = 1e-5;

/// Phase-step guard for sampled loops; a per-step motion at or beyond this
/// aborts rather than aliasing the winding number.
pub const PHASE_STEP_GUARD: f64 = std::f64::consts::FRAC_PI_2;

/// Tolerance bundle with the defaults assumed by the acceptance criteria.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Pairwise Poisson-bracket residual for involution checks.
    pub involution: f64,
    /// Agreement between the tensor-pipeline and coordinate evaluations of the
    /// torus integrals.
    pub consistency: f64,
    /// Drift bound for first integrals along Hamiltonian flows.
    pub conservation: f64,
    /// Momentum-map equivariance and algebraic identity residuals.
    pub identity: f64,
    /// Gauge invariance of the squared determinant.
    pub gauge: f64,
    /// Unitarity defect accepted by frame constructors.
    pub frame_unitarity: f64,
    /// Admissible constraint residual for on-shell points.
    pub on_shell: f64,
    /// Partition-of-unity residual for interpolation weights.
    pub weight_sum: f64,
    /// Residual for prescribed polynomial roots.
    pub root_residual: f64,
    /// Probe agreement when reconstructing covectors on a level set.
    pub probe_consistency: f64,
    /// Energy drift bound enforced by the integrator.
    pub energy_drift: f64,
    /// Symplectic-orthogonality residual for Liouville torus frames.
    pub lagrangian_residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            involution: 1e-5,
            consistency: 1e-9,
            conservation: 1e-5,
            identity: 1e-9,
            gauge: 1e-9,
            frame_unitarity: 1e-8,
            on_shell: 1e-8,
            weight_sum: 1e-10,
            root_residual: 1e-9,
            probe_consistency: 1e-8,
            energy_drift: 1e-5,
            lagrangian_residual: 1e-8,
        }
    }
}

/// Fixed-step integrator settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    /// Abort the flow when |H(p_t) - H(p_0)| exceeds this bound.
    pub energy_drift_bound: f64,
    /// Constraint-projection tolerance after each step.
    pub projection_tol: f64,
    /// Newton iterations allowed by the post-step projection.
    pub projection_iters: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            energy_drift_bound: 1e-5,
            projection_tol: 1e-10,
            projection_iters: 8,
        }
    }
}
