use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The affine system defined by the simplex is numerically singular.
    #[error("degenerate simplex geometry (reciprocal condition number {rcond:.3e})")]
    DegenerateGeometry { rcond: f64 },

    /// The `μ` table cannot be formed for this query (e.g. `Y₋P₋` is singular
    /// or the eigenvalue counts do not match the coefficient signs).
    #[error("sharpness certificate unavailable: {0}")]
    CertificateUnavailable(String),

    #[error("objective returned non-finite value {value} at {point:?}")]
    Evaluation { point: Vec<f64>, value: f64 },

    #[error("simplex regularity lost: relative deviation {deviation:.3e} exceeds {limit:.1e}")]
    RegularityFailure { deviation: f64, limit: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
