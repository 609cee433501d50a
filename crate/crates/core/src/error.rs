use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid coefficient set: {0}")]
    InvalidCoefficients(String),

    #[error("time {t} is not aligned with step {dt}")]
    Misaligned { t: f64, dt: f64 },

    #[error("causality violation: delayed time {tau} lies beyond the computed frontier {frontier}")]
    Causality { tau: f64, frontier: f64 },

    #[error("singular pivot {pivot:e} at row {row}")]
    SingularPivot { row: usize, pivot: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("[{tag}] invariant violated: {message}")]
    Invariant { tag: &'static str, message: String },

    #[error("unsupported norm pair (p={p}, q={q})")]
    UnsupportedNorm { p: f64, q: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invariant(tag: &'static str, message: impl Into<String>) -> Self {
        Error::Invariant {
            tag,
            message: message.into(),
        }
    }

    /// Short tag naming the property that failed, used in CLI exit messages.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Dimension(_) => "dimension",
            Error::InvalidCoefficients(_) => "coefficients",
            Error::Misaligned { .. } => "time-grid",
            Error::Causality { .. } => "causality",
            Error::SingularPivot { .. } => "factorization",
            Error::Precondition(_) => "precondition",
            Error::Invariant { tag, .. } => tag,
            Error::UnsupportedNorm { .. } => "norm",
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => "io",
        }
    }

    /// Whether the error signals a violated solver property rather than bad input.
    pub fn is_invariant_violation(&self) -> bool {
        matches!(
            self,
            Error::Invariant { .. } | Error::Causality { .. } | Error::SingularPivot { .. }
        )
    }
}
