use thiserror::Error;

/// Errors raised anywhere in the solver stack.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FsiError {
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("singular block `{label}`: pivot {pivot:e} at column {column}")]
    SingularBlock {
        label: String,
        column: usize,
        pivot: f64,
    },
    #[error("inverted element {element} (jacobian determinant {det:e})")]
    InvertedElement { element: usize, det: f64 },
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("newton iteration did not converge at step {step} (t = {time}): {reason}")]
    NewtonFailure {
        step: usize,
        time: f64,
        reason: String,
    },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for FsiError {
    fn from(e: std::io::Error) -> Self {
        FsiError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, FsiError>;
