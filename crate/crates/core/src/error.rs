use thiserror::Error;

use crate::states::GammaViolation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),

    #[error("duplicate subsystem label `{0}`")]
    DuplicateLabel(String),

    #[error("vector has zero norm")]
    ZeroNorm,

    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),

    #[error("operator is not a density operator: {0}")]
    NotDensity(String),

    #[error("invalid gamma parameters: {}", display_violations(.0))]
    InvalidGammas(Vec<GammaViolation>),

    #[error("Kraus family is incomplete (residual {residual:.3e})")]
    IncompleteFamily { residual: f64 },

    #[error("map is not an isometry (residual {residual:.3e})")]
    NotIsometry { residual: f64 },

    #[error("invalid outcome {outcome} for a family with {count} outcomes")]
    InvalidOutcome { outcome: usize, count: usize },

    #[error("no operator registered for transcript {0:?}")]
    MissingKey(Vec<usize>),

    #[error("branch {0:?} admits no exact correction")]
    NoExactCorrection(Vec<usize>),

    #[error("party {party} cannot act on `{label}`")]
    NotOwned { party: String, label: String },

    #[error("party {party} does not know outcome {index} when acting")]
    UnknownOutcome { party: String, index: usize },

    #[error("invalid coefficients: {0}")]
    InvalidAlpha(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

fn display_violations(v: &[GammaViolation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
