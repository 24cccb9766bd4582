use thiserror::Error;

/// Errors raised by the numerical pipeline.
///
/// Variants group into three families that the CLI maps onto exit codes:
/// parameter/configuration problems, bad input data, and numerical failures.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum HavokError {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("degenerate input at index {index}: {reason}")]
    DegenerateInput { index: usize, reason: String },

    #[error("rank {requested} exceeds numerical rank (sigma_{requested}/sigma_1 = {ratio:.3e})")]
    DegenerateRank { requested: usize, ratio: f64 },

    #[error("curvature kappa_{index} is undefined: Gram matrix G_{gram} is singular")]
    UndefinedCurvature {
        index: usize,
        gram: usize,
        /// Curvatures computed before the singular Gram matrix was hit.
        partial: Vec<f64>,
    },

    #[error("extrapolation outside knot span [{lo}, {hi}]: {detail}")]
    Extrapolation { lo: f64, hi: f64, detail: String },

    #[error("integration diverged at step {step}")]
    Divergence { step: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl HavokError {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        HavokError::Parameter(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        HavokError::Data(msg.into())
    }

    /// Coarse classification used for process exit codes.
    pub fn kind(&self) -> ErrorKind {
        match self {
            HavokError::Parameter(_) | HavokError::Config(_) => ErrorKind::Config,
            HavokError::Data(_)
            | HavokError::DegenerateInput { .. }
            | HavokError::Extrapolation { .. } => ErrorKind::Data,
            HavokError::DegenerateRank { .. }
            | HavokError::UndefinedCurvature { .. }
            | HavokError::Divergence { .. }
            | HavokError::Numerical(_) => ErrorKind::Numerical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numerical,
}

pub type Result<T> = std::result::Result<T, HavokError>;
