//! Error types shared across the library.

use thiserror::Error;

/// Everything that can go wrong while evaluating potentials, integrating
/// trajectories, shooting boundary-value problems, or assembling curvature
/// estimates.
#[derive(Error, Debug, Clone)]
pub enum MtwError {
    #[error("input error: {0}")]
    Input(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("evaluation error: non-finite value at {context}")]
    NonFinite { context: String },

    #[error("integration quality: energy drift {drift:.3e} exceeds tolerance {tol:.3e}")]
    EnergyDrift { drift: f64, tol: f64 },

    #[error("integration quality: symplectic identity defect {defect:.3e} exceeds {tol:.1e}")]
    SymplecticDefect { defect: f64, tol: f64 },

    #[error("shooting did not converge: best residual {residual:.3e} over {starts} start(s)")]
    NoConvergence { residual: f64, starts: usize },

    #[error("shooting ambiguity: starts converged to distinct velocities ({separation:.3e} apart)")]
    Ambiguity { separation: f64 },

    #[error("conjugate point: sigma_min(N)/sigma_max(N) = {ratio:.3e} at t = {t}")]
    ConjugatePoint { t: f64, ratio: f64 },

    #[error("cross-curvature undefined: {0}")]
    UndefinedCurvature(String),

    #[error("stencil left the admissible domain: {0}")]
    Domain(String),

    #[error("quadrature accuracy: refinement gap {gap:.3e} exceeds {tol:.3e}")]
    QuadratureAccuracy { gap: f64, tol: f64 },

    #[error("scan produced no usable samples: {0}")]
    EmptyScan(String),
}

pub type Result<T> = std::result::Result<T, MtwError>;
