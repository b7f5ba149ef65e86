//! Simulated trusted execution environment.
//!
//! There is no hardware isolation here. The trusted runtime is an ordinary
//! component whose only entry point is the call gate, and everything the
//! untrusted host sees of its inputs and outputs is ciphertext under a
//! session key established through attestation.

pub mod attestation;
pub mod envelope;
pub mod error;
pub mod measurement;
pub mod owner;
pub mod runtime;

pub use attestation::{AttestationReport, AttestationRoot, Challenge, KeyShare, Verifier};
pub use envelope::{
    open, open_for, ChannelAad, CipherEnvelope, Direction, KeyId, Sealer, SessionKey,
    ENVELOPE_OVERHEAD, RUNTIME_SENDER,
};
pub use error::EnclaveError;
pub use measurement::{measure_code, EnclaveMeasurement, ENGINE_BUILD_TAG};
pub use owner::DataOwner;
pub use runtime::{
    compute_body, create_enclave, error_body, reply_failed, RuntimeState, SessionInfo,
    TrustedRuntime,
};
