use std::path::PathBuf;

use cardio_core::HrvError;
use cardio_enclave::EnclaveError;

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("ingest directory {path} unavailable: {source}")]
    SourceUnavailable {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("result directory {path} unavailable: {source}")]
    SinkUnavailable {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("channel to the trusted component is closed")]
    ChannelClosed,
    #[error("attestation failed: {0}")]
    AttestationFailed(EnclaveError),
    #[error("sealed mode needs a data owner holding the session key")]
    MissingOwner,
    #[error("authentication failure on the trusted channel")]
    AuthenticationFailure,
    #[error("trusted runtime refused the call: {0}")]
    Refused(EnclaveError),
    /// The batch ran and failed. `kind` is the cause where the host may
    /// know it; sealed batches fail without one.
    #[error("batch failed{}", kind.as_deref().map(|k| format!(": {k}")).unwrap_or_default())]
    BatchFailed { kind: Option<String> },
    #[error(transparent)]
    Hrv(#[from] HrvError),
    #[error("i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl EngineError {
    pub(crate) fn failed(kind: impl Into<String>) -> Self {
        EngineError::BatchFailed {
            kind: Some(kind.into()),
        }
    }
}
