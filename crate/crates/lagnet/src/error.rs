use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced while building networks, assembling multiplier systems,
/// or integrating the constrained dynamics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cycle detected in the weight digraph")]
    CycleDetected,

    #[error("edge ({to}, {from}) references an unknown neuron")]
    DanglingEdge { to: usize, from: usize },

    #[error("duplicate edge ({to}, {from})")]
    DuplicateEdge { to: usize, from: usize },

    #[error("edge ({to}, {from}) targets a clamped neuron")]
    EdgeIntoClamped { to: usize, from: usize },

    #[error("output index {index} out of range")]
    OutputIndexOutOfRange { index: usize },

    #[error("output {index} is a clamped neuron")]
    ClampedOutput { index: usize },

    #[error("output {index} feeds a non-output neuron and cannot be ordered last")]
    OutputNotTerminal { index: usize },

    #[error("input channels must cover 0..{expected} exactly once")]
    BadInputChannels { expected: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("parameter {name} must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },

    #[error("transition half-width {half_width} must lie in (0, tau/2) for tau = {tau}")]
    InvalidTransitionWidth { half_width: f64, tau: f64 },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("unknown preset {name:?}")]
    UnknownPreset { name: String },

    #[error("dataset line {line}: {message}")]
    DatasetFormat { line: usize, message: String },

    #[error("Gram matrix is not positive definite (constraint gradients are rank deficient)")]
    IndefiniteGram,

    #[error("triangular solve hit a zero diagonal at row {index}")]
    SingularTriangular { index: usize },

    #[error(
        "inconsistent initial data: constraint {index} has time derivative {value:e} at t = 0"
    )]
    InconsistentInitialData { index: usize, value: f64 },

    #[error("state became non-finite at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("constraint residual {residual:e} exceeded tolerance {tolerance:e} at t = {t}")]
    ConstraintDrift { t: f64, residual: f64, tolerance: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
