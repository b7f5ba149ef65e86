//! The data owner: the party that attests the trusted runtime and holds the
//! session key. Client gateways seal deposits with sealers it hands out and
//! open result files with its key. The untrusted host only relays the
//! handshake messages.

use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Mutex;

use cardio_core::AnalysisAlgorithm;

use crate::attestation::{AttestationReport, AttestationRoot, Challenge, KeyShare, Verifier};
use crate::envelope::{
    open, ChannelAad, CipherEnvelope, Direction, Sealer, SessionKey, RUNTIME_SENDER,
};
use crate::error::EnclaveError;
use crate::measurement::{measure_code, EnclaveMeasurement, ENGINE_BUILD_TAG};

pub struct DataOwner {
    verifier: Verifier,
    session: Option<SessionKey>,
    own_sealer: Option<Mutex<Sealer>>,
    next_sender: AtomicU32,
}

impl DataOwner {
    pub fn new(expected: EnclaveMeasurement, root: &AttestationRoot) -> Self {
        DataOwner {
            verifier: Verifier::new(expected, root.public()),
            session: None,
            own_sealer: None,
            next_sender: AtomicU32::new(1),
        }
    }

    /// Owner expecting the engine build running `algorithm` under the
    /// fixture attestation root.
    pub fn for_algorithm(algorithm: AnalysisAlgorithm) -> Self {
        Self::new(
            measure_code(algorithm, ENGINE_BUILD_TAG),
            &AttestationRoot::fixture(),
        )
    }

    pub fn expected(&self) -> &EnclaveMeasurement {
        self.verifier.expected()
    }

    pub fn challenge(&mut self) -> Challenge {
        self.verifier.challenge()
    }

    /// Verifies the runtime's report and derives the session key. Returns the
    /// share the runtime needs to finish key agreement.
    pub fn accept(&mut self, report: &AttestationReport) -> Result<KeyShare, EnclaveError> {
        let (key, share) = self.verifier.establish_session(report)?;
        self.own_sealer = Some(Mutex::new(key.sealer(0)));
        self.session = Some(key);
        self.next_sender.store(1, Ordering::Relaxed);
        Ok(share)
    }

    pub fn session(&self) -> Option<&SessionKey> {
        self.session.as_ref()
    }

    /// A sealer under a sender id no other party holds.
    pub fn issue_sealer(&self) -> Option<Sealer> {
        let sender = self.next_sender.fetch_add(1, Ordering::Relaxed);
        assert!(sender < RUNTIME_SENDER, "sender ids exhausted");
        self.session.as_ref().map(|k| k.sealer(sender))
    }

    /// Seals with the owner's own sender id.
    pub fn seal(&self, plaintext: &[u8], aad: &ChannelAad) -> Result<CipherEnvelope, EnclaveError> {
        let sealer = self.own_sealer.as_ref().ok_or(EnclaveError::UnknownKeyId)?;
        sealer.lock().expect("sealer lock").seal_for(plaintext, aad)
    }

    /// Opens a runtime reply. Returns the address it was sealed for, whether
    /// it reports success, and the body.
    pub fn open_reply(
        &self,
        reply: &CipherEnvelope,
    ) -> Result<(ChannelAad, bool, Vec<u8>), EnclaveError> {
        let key = self.session.as_ref().ok_or(EnclaveError::UnknownKeyId)?;
        let aad = reply
            .claimed_aad()
            .ok_or(EnclaveError::AuthenticationFailure)?;
        let ok = match aad.direction {
            Direction::Reply => true,
            Direction::ErrorReply => false,
            _ => return Err(EnclaveError::AuthenticationFailure),
        };
        let body = open(reply, key, &reply.aad)?;
        Ok((aad, ok, body))
    }
}
