use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("mean distance {mean} is outside the feasible range (0, {upper})")]
    InfeasibleMean { mean: f64, upper: f64 },

    #[error("degenerate moment: {0}")]
    DegenerateMoment(String),

    #[error("inconsistent moments: {0}")]
    InconsistentMoments(String),

    #[error("sign ambiguous: {0}")]
    SignAmbiguous(String),

    #[error("triplet unavailable for labeling function {lf}")]
    TripletUnavailable { lf: usize },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("all aggregation weights are zero")]
    DegenerateWeights,

    #[error("rho = {rho} exceeds the exhaustive threshold {threshold}; use the local-search solver")]
    UseHeuristic { rho: usize, threshold: usize },

    #[error("covariance matrix is not positive definite after ridge repair")]
    SingularCovariance,

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("graph is disconnected: node {0} is unreachable")]
    Disconnected(usize),

    #[error("generation failed: {0}")]
    Generation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by malformed or unsupported input rather than
    /// by an estimator failing on valid input.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::TripletUnavailable { .. }
                | Error::Configuration(_)
                | Error::InvalidMetric(_)
                | Error::Disconnected(_)
                | Error::Parse(_)
                | Error::Csv(_)
                | Error::Json(_)
                | Error::UseHeuristic { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
