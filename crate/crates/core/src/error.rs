use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of bounds in dimension {dim} (extent {extent})")]
    OutOfBounds {
        dim: usize,
        index: usize,
        extent: usize,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("singular matrix: pivot {pivot:e} below tolerance {tolerance:e}")]
    Singular { pivot: f64, tolerance: f64 },

    #[error("singular jacobian at local coordinate {local:?}")]
    SingularJacobian { local: Vec<f64> },

    #[error("newton iteration did not converge after {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("illegal geometry kind: {shape} of dimension {dim}")]
    IllegalKind { shape: String, dim: usize },

    #[error("quadrature order {order} unsupported on {kind}; maximum is {max}")]
    UnsupportedOrder {
        kind: String,
        order: usize,
        max: usize,
    },

    #[error("unsupported element: {0}")]
    UnsupportedElement(String),

    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    #[error("row {row} is not strictly increasing")]
    UnsortedRow { row: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
