use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("tilt normalizer diverges: {0}")]
    DivergentNormalizer(String),

    #[error("grid too small: boundary density ratio {ratio:.3e} exceeds {tol:.1e}")]
    MassLeakage { ratio: f64, tol: f64 },

    #[error("grid under-resolves the density: quadrature mass {mass:.6} of a normalized density")]
    Unresolved { mass: f64 },

    #[error("density is not positive at grid node {node}")]
    NonPositiveDensity { node: usize },

    #[error("covariance matrix is singular (smallest eigenvalue {0:.3e})")]
    SingularCovariance(f64),

    #[error("iteration did not converge after {iterations} steps (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("mean-zero solve failed: {0}")]
    SingularSolve(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("step size {dt} exceeds stability cap {cap}")]
    StepSize { dt: f64, cap: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cannot parse spec `{spec}`: {reason}")]
    Parse { spec: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
