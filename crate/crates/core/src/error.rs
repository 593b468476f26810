use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("matrix is not positive semidefinite (eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("ensemble is invalid: {0}")]
    InvalidEnsemble(String),

    #[error("ill-posed problem: {0}")]
    IllPosed(String),

    #[error("success probability is zero")]
    ZeroSuccess,

    #[error("coefficient matrix is zero")]
    ZeroCoefficient,

    #[error("empty optimal subspace")]
    EmptySubspace,

    #[error("linear-program structure not detected: {0}")]
    NoLpStructure(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
