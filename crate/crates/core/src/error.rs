use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HrvError {
    #[error("malformed record: {0}")]
    MalformedRecord(String),

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("insufficient span: need at least {needed_ms} ms of data, got {got_ms} ms")]
    InsufficientSpan { needed_ms: u64, got_ms: u64 },

    #[error("HF/LF ratio undefined: LF power is zero")]
    UndefinedRatio,

    #[error("invalid frequency grid: {0}")]
    InvalidGrid(&'static str),

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("malformed batch message: {0}")]
    MalformedBatch(String),

    #[error("malformed result body: {0}")]
    MalformedResult(String),
}

impl HrvError {
    /// Short stable identifier used in result bodies and statistics.
    pub fn kind(&self) -> &'static str {
        match self {
            HrvError::MalformedRecord(_) => "MalformedRecord",
            HrvError::InsufficientData { .. } | HrvError::InsufficientSpan { .. } => {
                "InsufficientData"
            }
            HrvError::UndefinedRatio => "UndefinedRatio",
            HrvError::InvalidGrid(_) => "InvalidGrid",
            HrvError::InvalidSeries(_) => "InvalidSeries",
            HrvError::MalformedBatch(_) => "MalformedBatch",
            HrvError::MalformedResult(_) => "MalformedResult",
        }
    }
}
