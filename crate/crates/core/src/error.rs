use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(
        "post-selected state is orthogonal to the pre-selected state (|overlap| = {overlap:.3e})"
    )]
    OrthogonalPostSelection { overlap: f64 },

    #[error("{value} is not an eigenvalue of the operator")]
    NotAnEigenvalue { value: f64 },

    #[error("operator is not Hermitian")]
    NotHermitian,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("state has no amplitude left")]
    EmptyState,

    #[error("conflicting couplers: more than one {0} coupler on the same arm")]
    ConflictingCouplers(&'static str),

    #[error("post-selection probability vanishes ({probability:.3e})")]
    VanishingPostSelection { probability: f64 },

    #[error("g2 denominator is zero")]
    ZeroDenominator,

    #[error("degenerate profile: {0}")]
    DegenerateProfile(&'static str),

    #[error("fit did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("{dropped} of {total} bootstrap fits failed to converge (limit 1%)")]
    TooManyDroppedFits { dropped: usize, total: usize },

    #[error("weak-value scale <X1 - X0> = {scale:.4} um is below 1 um")]
    ZeroScale { scale: f64 },

    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
