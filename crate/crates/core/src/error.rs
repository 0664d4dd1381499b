use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("unsupported dimension {dim}: {reason}")]
    UnsupportedDimension { dim: usize, reason: &'static str },
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("invalid state: {0}")]
    State(String),
    #[error("ingestion failed: {0}")]
    Ingestion(String),
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("lp file parse error at line {line}: {reason}")]
    LpParse { line: usize, reason: String },
    #[error("run cancelled")]
    Cancelled,
    #[error("time limit exceeded")]
    TimedOut,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Stable machine-readable tag for the variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parameter(_) => "invalid_parameter",
            Error::UnsupportedDimension { .. } => "unsupported_dimension",
            Error::Validation(_) => "validation",
            Error::State(_) => "state",
            Error::Ingestion(_) => "ingestion",
            Error::Construction(_) => "construction",
            Error::Verification(_) => "verification",
            Error::LpParse { .. } => "lp_parse",
            Error::Cancelled => "cancelled",
            Error::TimedOut => "timed_out",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }

    /// Whether the error stems from bad caller input rather than a failure.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Parameter(_) | Error::UnsupportedDimension { .. } | Error::Validation(_))
    }
}
