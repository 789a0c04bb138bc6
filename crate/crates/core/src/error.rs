use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("derivative order {order} exceeds the supported maximum {max}")]
    OrderTooHigh { order: usize, max: usize },

    #[error("mismatched operands: {0}")]
    Mismatch(String),

    #[error("tape node belongs to a cleared tape")]
    StaleNode,

    #[error("{what} overflows for argument {arg}")]
    Overflow { what: &'static str, arg: usize },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("expression parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("jets do not carry derivative {alpha:?} (order {order})")]
    MissingDerivative { alpha: Vec<u32>, order: usize },

    #[error("non-finite loss at step {step}")]
    NonFinite { step: usize },

    #[error("construction precondition violated: {0}")]
    Construction(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::OrderTooHigh { .. } => "order_too_high",
            Error::Mismatch(_) => "mismatch",
            Error::StaleNode => "stale_node",
            Error::Overflow { .. } => "overflow",
            Error::Shape(_) => "shape",
            Error::Parse { .. } => "parse",
            Error::InvalidSpec(_) => "invalid_spec",
            Error::MissingDerivative { .. } => "missing_derivative",
            Error::NonFinite { .. } => "non_finite",
            Error::Construction(_) => "construction",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
