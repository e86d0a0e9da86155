use thiserror::Error;

/// Failures surfaced by the library. Certification outcomes (holds, violated,
/// inconclusive) are not errors; they live in the report types.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("valuation of zero is undefined")]
    UndefinedValuation,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("incomplete definition: no value for {0}")]
    IncompleteDefinition(String),

    #[error("degenerate measure: total mass is zero")]
    DegenerateMeasure,

    #[error("not structured: {0}")]
    NotStructured(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("precondition violated ({property}): {witness}")]
    Precondition { property: String, witness: String },

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn precondition(property: impl Into<String>, witness: impl Into<String>) -> Self {
        Error::Precondition {
            property: property.into(),
            witness: witness.into(),
        }
    }
}
