use thiserror::Error;

use crate::runtime::RuntimeState;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnclaveError {
    #[error("call gate refused {call}: runtime is {state:?}")]
    CallGateRefused {
        call: &'static str,
        state: RuntimeState,
    },

    #[error("{call} not allowed while runtime is {state:?}")]
    InvalidState {
        call: &'static str,
        state: RuntimeState,
    },

    #[error("measurement mismatch")]
    MeasurementMismatch,

    #[error("invalid attestation report")]
    InvalidReport,

    #[error("attestation report does not answer an outstanding challenge")]
    StaleNonce,

    #[error("nonce space exhausted for this key")]
    NonceExhausted,

    #[error("authentication failure")]
    AuthenticationFailure,

    #[error("unknown key id")]
    UnknownKeyId,

    #[error("malformed envelope: {0}")]
    MalformedEnvelope(String),
}
