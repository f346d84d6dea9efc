use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid design: {0}")]
    InvalidDesign(String),
    #[error("angle {0} deg outside the open interval (-90, 90)")]
    AngleDomain(f64),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("lag {0} has no contributing covariance entry")]
    MissingLag(i64),
    #[error("no detectable source")]
    NoDetectableSource,
    #[error("capacity exceeded: {k} sources requested but at most {delta} are identifiable")]
    CapacityExceeded { k: usize, delta: usize },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("matrix is singular")]
    Singular,
    #[error("bound undefined for this configuration: {0}")]
    BoundUndefined(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
