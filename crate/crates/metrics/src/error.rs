use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("unknown run {0:?}")]
    UnknownRun(String),

    #[error("cannot summarize an empty group")]
    EmptyGroup,
}
