use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate element {0}")]
    DegenerateElement(usize),

    #[error("invalid coefficient: {0}")]
    InvalidCoefficient(String),

    #[error("non-finite or non-positive-definite sample at ({x}, {y})")]
    InvalidSample { x: f64, y: f64 },

    #[error("no admissible exponent: {0}")]
    InadmissibleExponent(String),

    #[error("conjugate gradients did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
