use thiserror::Error;

/// Errors produced by measure construction, transport solvers and schemes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MdeError {
    #[error("measure has no atoms")]
    EmptyInput,
    #[error("negative weight {weight} at atom {index}")]
    NegativeWeight { index: usize, weight: f64 },
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("transport LP is infeasible")]
    Infeasible,
    #[error("simplex exceeded its iteration cap of {cap}")]
    IterationCap { cap: usize },
    #[error("base atom {position:?} is not on the space grid (dx = {dx})")]
    BaseOffGrid { position: Vec<f64>, dx: f64 },
    #[error("support blowup: {count} atoms exceeds the cap of {cap}")]
    SupportBlowup { count: usize, cap: usize },
    #[error("time {t} outside [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
    #[error("path carries no interpolation data for interval {interval}")]
    MissingInterpolation { interval: usize },
    #[error("endpoint mismatch at {position:?}: {detail}")]
    EndpointMismatch { position: Vec<f64>, detail: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = MdeError> = std::result::Result<T, E>;
