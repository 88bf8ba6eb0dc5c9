use thiserror::Error;

use crate::dsl::ParseDiagnostic;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("contraction error: {0}")]
    Contraction(String),

    #[error("{0}")]
    Parse(#[from] ParseDiagnostic),

    /// Domain violation while evaluating an expression; `offset` is the byte
    /// offset of the offending node in its source.
    #[error("evaluation error at byte {offset}: {message}")]
    Eval { offset: usize, message: String },

    #[error("degenerate matrix (det = {det:e}, threshold = {threshold:e})")]
    Degenerate { det: f64, threshold: f64 },

    #[error("decomposition error: reassembly residual {residual:e} exceeds {tolerance:e}")]
    Decomposition { residual: f64, tolerance: f64 },

    #[error("stencil error: {0}")]
    Stencil(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn eval(offset: usize, message: impl Into<String>) -> Self {
        Error::Eval {
            offset,
            message: message.into(),
        }
    }
}
