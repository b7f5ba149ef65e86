use std::path::PathBuf;

use cardio_core::HrvError;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("invalid sensor configuration: {0}")]
    InvalidSensor(String),
    #[error("invalid fleet configuration: {0}")]
    InvalidFleet(String),
    #[error("nothing to deposit")]
    EmptyDeposit,
    #[error("deposit directory {path} unavailable after {attempts} attempts: {source}")]
    DepositUnavailable {
        path: PathBuf,
        attempts: u32,
        source: std::io::Error,
    },
    #[error("fetch directory {path} unavailable: {source}")]
    FetchUnavailable {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("could not open sealed result {file}")]
    SealedResult { file: String },
    #[error(transparent)]
    Hrv(#[from] HrvError),
}
