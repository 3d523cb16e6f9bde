use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty domain: the map has a zero-dimensional source")]
    EmptyDomain,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("complex structure required but missing")]
    MissingComplexStructure,
    #[error("invalid complex structure: {0}")]
    InvalidComplexStructure(String),
    #[error("frame is not orthonormal (defect {0:.3e})")]
    NotOrthonormal(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("no algebraic relation at degree {degree} (sigma ratio {ratio:.3e})")]
    NoRelation { degree: usize, ratio: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("search failed: {0}")]
    SearchFailed(String),
    #[error("net too large: diam * sqrt(k) = {0:.1}")]
    NetTooLarge(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
