use thiserror::Error;

#[derive(Debug, Error)]
pub enum SnseError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: expected n={expected}, found n={found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("non-finite value at index {index} in {context}")]
    NonFinite { context: &'static str, index: usize },

    #[error("length mismatch in {context}: expected {expected}, found {found}")]
    Length {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("unsupported exponent p={0}")]
    UnsupportedExponent(f64),

    #[error("field mean {mean:e} is not zero (tolerance {tol:e})")]
    NonZeroMean { mean: f64, tol: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("blow-up guard tripped at step {step}: sup norm {sup:e} exceeds {bound:e}")]
    BlowUp { step: usize, sup: f64, bound: f64 },

    #[error("configuration rejected:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("snapshot format: {0}")]
    Format(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("all {0} realizations were invalid")]
    AllInvalid(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SnseError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> SnseError {
    SnseError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
