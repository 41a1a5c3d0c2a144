use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("unsupported quadrature degree {degree} (supported: 0..={max})")]
    UnsupportedDegree { degree: usize, max: usize },

    #[error("unknown space descriptor `{0}` (valid: P1, P2, P3, RT0, RT1, RT2, BDM1, BDM2)")]
    UnknownSpace(String),

    #[error("degenerate space: {0}")]
    DegenerateSpace(String),

    #[error("coefficient sigma = {value} is not positive at ({x}, {y})")]
    NonPositiveCoefficient { value: f64, x: f64, y: f64 },

    #[error(
        "solver did not converge after {iterations} iterations (relative residual {residual:.3e})"
    )]
    NotConverged { iterations: usize, residual: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("matrix of size {size} exceeds dense limit {limit}")]
    SizeExceeded { size: usize, limit: usize },

    #[error("unknown problem `{0}` (valid: smooth1, smooth-var, singular)")]
    UnknownProblem(String),

    #[error("problem `{0}` has no exact solution")]
    MissingExact(String),

    #[error("unsupported element pair {0}")]
    UnsupportedPair(String),

    #[error("singular local system on element {element}")]
    SingularLocalSystem { element: usize },

    #[error("problem `{name}` fails its consistency check (residual {residual:.3e})")]
    Inconsistent { name: String, residual: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
