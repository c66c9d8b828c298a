use thiserror::Error;

/// Errors raised by the workbench.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degree {degree} exceeds truncation degree {max}")]
    DegreeOutOfRange { degree: usize, max: usize },

    #[error("letter {letter} out of range for {n} variables")]
    LetterOutOfRange { letter: usize, n: usize },

    #[error("multinomial count overflows 64 bits for {0:?}")]
    Overflow(Vec<usize>),

    #[error("point has norm {norm} >= 1")]
    OutOfBall { norm: f64 },

    #[error("point has norm {norm}, expected 1")]
    OffSphere { norm: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("row norm {norm} exceeds 1 + {tol}")]
    NotAContraction { norm: f64, tol: f64 },

    #[error("operators do not commute (residual {residual:e})")]
    NotCommuting { residual: f64 },

    #[error("eigenvalue {0:e} is too negative for a positive square root")]
    NotPositive(f64),

    #[error("embedding is not isometric (residual {0:e})")]
    NotIsometric(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("affine constraints are inconsistent (residual {residual:e})")]
    InfeasibleAffine { residual: f64 },

    #[error("Gram matrix is ill-conditioned (condition number {cond:e})")]
    IllConditioned { cond: f64 },

    #[error("malformed matrix file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
