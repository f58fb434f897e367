use thiserror::Error;

use crate::geometry::Point;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SqgError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("boundary row violates the Dirichlet condition: max |theta(x1,0)| = {max_violation:e}")]
    BoundaryViolation { max_violation: f64 },

    #[error("field is nonzero outside its declared support radius {radius} (max |theta| = {max_outside:e})")]
    SupportViolation { radius: f64, max_outside: f64 },

    #[error("derivative order {order} exceeds the supported maximum of 3")]
    DerivativeOrder { order: usize },

    #[error("non-finite sample in {what}")]
    NonFinite { what: &'static str },

    #[error("invalid norm request: {0}")]
    InvalidNormRequest(String),

    #[error("invalid kernel parameters: {0}")]
    InvalidKernel(String),

    #[error("target {index} at x2 = {x2} is not strictly inside the half-plane")]
    TargetNotInterior { index: usize, x2: f64 },

    #[error("{got} probes supplied, at least {need} are required")]
    TooFewProbes { got: usize, need: usize },

    #[error("invalid probe set: {0}")]
    InvalidProbes(String),

    #[error("ratio is degenerate: denominator {denominator:e}")]
    Degenerate { denominator: f64 },

    #[error("tracer {index} left the grid extent at ({}, {})", position.x1, position.x2)]
    TracerEscaped { index: usize, position: Point },

    #[error("support radius {support} plus stencil margin exceeds the grid half-width {half_width}")]
    SupportEscaped { support: f64, half_width: f64 },

    #[error("invalid time-step configuration: {0}")]
    InvalidTimeStep(String),

    #[error("invalid experiment configuration: {0}")]
    InvalidExperiment(String),

    #[error("too few samples for the audit: {got} < {need}")]
    TooFewSamples { got: usize, need: usize },

    #[error("snapshot parse error at line {line}: {message}")]
    SnapshotParse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for SqgError {
    fn from(e: std::io::Error) -> Self {
        SqgError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SqgError>;
