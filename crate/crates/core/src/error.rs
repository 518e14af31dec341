use thiserror::Error;

/// Errors raised by model loading and the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model document: {0}")]
    Schema(String),

    #[error("Q is not symmetric (max |Q - Qᵀ| = {0:e})")]
    AsymmetricNoise(f64),

    #[error("Q is not positive semidefinite: eigenvalue {eigenvalue:e} below -{tolerance:e}")]
    NotPsd { eigenvalue: f64, tolerance: f64 },

    #[error("Lyapunov equation has no unique solution (A and -Aᵀ share an eigenvalue)")]
    NoUniqueSolution,

    #[error("model is not symmetric (commutator residual {residual:e} > {tolerance:e})")]
    NotSymmetric { residual: f64, tolerance: f64 },

    #[error("{name} is numerically singular: smallest eigenvalue {min_eigenvalue:e} below floor {floor:e}")]
    SingularMatrix {
        name: &'static str,
        min_eigenvalue: f64,
        floor: f64,
    },

    #[error("Q_t is singular for t = {0:e}")]
    SingularQt(f64),

    #[error("no nondegenerate invariant measure: {0}")]
    Hypothesis(String),

    #[error("polynomial degree {degree} exceeds the cap {cap}")]
    DegreeOverflow { degree: usize, cap: usize },

    #[error("{nodes}-node Gauss-Hermite rule is exact to degree {exact}, observable has degree {degree}")]
    QuadratureOrderTooLow {
        nodes: usize,
        exact: usize,
        degree: usize,
    },

    #[error("tensor quadrature supports at most {max} dimensions, got {dim}; use Monte Carlo")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("ensemble was not started from the stationary law")]
    NotStationaryStart,

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
