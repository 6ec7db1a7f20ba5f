use thiserror::Error;

/// Errors surfaced by this crate.
///
/// Numerical routines fail loudly on degenerate inputs (zero vectors,
/// cancelled means, empty score lists) instead of producing NaNs that
/// poison downstream metrics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("vector contains a non-finite component")]
    NonFinite,

    #[error("cannot normalize a vector with norm below 1e-9")]
    ZeroVector,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("mean direction is degenerate: inputs cancel to a norm below 1e-9")]
    DegenerateMean,

    #[error("embedding is (anti-)parallel to the centroid; residual is degenerate")]
    DegenerateResidual,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("aggregation weights sum to zero")]
    ZeroWeights,

    #[error("duplicate item id `{0}`")]
    DuplicateId(String),

    #[error("unresolvable id `{0}`")]
    UnresolvableId(String),

    #[error("gallery recognizability scores are required when gallery gating is enabled")]
    MissingGalleryScores,

    #[error("error reduction is undefined: baseline FRR is zero")]
    ZeroBaselineFrr,

    #[error("no operating point for target {0} in report")]
    MissingOperatingPoint(f64),

    #[error("open-set evaluation requires at least one non-mated probe")]
    NoNonMatedProbes,

    #[error("could not place {count} identity means with pairwise |cos| < {bound} in dimension {dim}")]
    SeparationUnachievable { count: usize, bound: f64, dim: usize },

    #[error("{path}:{line}: {message}")]
    Malformed {
        path: String,
        line: u64,
        message: String,
    },

    // The message embeds the cause, and the field name deliberately avoids
    // thiserror's `source` convention: exposing it through `source()` too
    // would make chain-printing reporters render it twice.
    #[error("{path}: {cause}")]
    Io { path: String, cause: std::io::Error },
}

impl Error {
    /// Attach a path to a raw I/O error.
    pub(crate) fn io(path: impl Into<String>, cause: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            cause,
        }
    }

    /// Build a format error pinned to a file location (line is 1-based,
    /// 0 when the position is not line-oriented).
    pub(crate) fn malformed(path: impl Into<String>, line: u64, message: impl Into<String>) -> Self {
        Error::Malformed {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
