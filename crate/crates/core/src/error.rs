use thiserror::Error;

use crate::point::Point;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("unsupported composition: {0}")]
    UnsupportedComposition(String),

    #[error("invalid parameters: {0}")]
    Construction(String),

    /// `χ(id)` lies outside the domain, so `id - χ(id)` would be a unit.
    #[error("unit obstruction: χ(id) = {c} lies outside the domain")]
    UnitObstruction { c: Point },

    #[error("not a point evaluation at {c}: residual {residual:.3e} exceeds {tol:.3e}")]
    NotPointEvaluation { c: Point, residual: f64, tol: f64 },

    #[error("invalid homomorphism: {0}")]
    InvalidHomomorphism(String),

    #[error("recovery failure: residual {residual:.3e} exceeds {tol:.3e}")]
    RecoveryFailure { residual: f64, tol: f64 },

    #[error("oracle error: {0}")]
    Oracle(String),

    #[error("degree too high: scaled Gram condition number {condition:.3e}")]
    DegreeTooHigh { condition: f64 },

    #[error("stencil error: {0}")]
    Stencil(String),

    #[error("frame construction failed: {0}")]
    Frame(String),

    #[error("hypothesis failure: {0}")]
    HypothesisFailure(String),

    #[error("limit dichotomy violated: {0}")]
    Dichotomy(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag used in CLI error documents.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Usage(_) => "usage",
            Error::UnsupportedComposition(_) => "unsupported_composition",
            Error::Construction(_) => "construction",
            Error::UnitObstruction { .. } => "unit_obstruction",
            Error::NotPointEvaluation { .. } => "not_point_evaluation",
            Error::InvalidHomomorphism(_) => "invalid_homomorphism",
            Error::RecoveryFailure { .. } => "recovery_failure",
            Error::Oracle(_) => "oracle",
            Error::DegreeTooHigh { .. } => "degree_too_high",
            Error::Stencil(_) => "stencil",
            Error::Frame(_) => "frame",
            Error::HypothesisFailure(_) => "hypothesis_failure",
            Error::Dichotomy(_) => "dichotomy",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
