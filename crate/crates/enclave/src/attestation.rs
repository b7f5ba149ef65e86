//! Attestation handshake and session-key agreement.
//!
//! A report binds the runtime's measurement, the verifier's challenge and a
//! fresh X25519 key share under a signature from the attestation root. The
//! root is a fixed keypair standing in for the platform attestation service.
//! Both ends then derive the session key with HKDF-SHA256 over the X25519
//! shared secret, salted by the measurement and bound to the nonce and both
//! shares.

use std::collections::HashSet;

use ed25519_dalek::{Signature, Signer, SigningKey, Verifier as _, VerifyingKey};
use hkdf::Hkdf;
use rand::rngs::OsRng;
use rand::RngCore;
use sha2::Sha256;
use x25519_dalek::{EphemeralSecret, PublicKey};

use crate::envelope::{KeyId, SessionKey, KEY_ID_LEN};
use crate::error::EnclaveError;
use crate::measurement::EnclaveMeasurement;

pub type Challenge = [u8; 16];
pub type KeyShare = [u8; 32];

const REPORT_DOMAIN: &[u8] = b"cardio.attestation.report.v1";
const SESSION_INFO: &[u8] = b"cardio.session.v1";

// Seed of the simulated attestation root. Test fixture material, not a secret.
const ROOT_SEED: [u8; 32] = *b"cardio-simulated-attestation-rt!";

/// The simulated attestation root keypair.
#[derive(Clone)]
pub struct AttestationRoot {
    signing: SigningKey,
}

impl AttestationRoot {
    pub fn fixture() -> Self {
        AttestationRoot {
            signing: SigningKey::from_bytes(&ROOT_SEED),
        }
    }

    pub fn from_seed(seed: [u8; 32]) -> Self {
        AttestationRoot {
            signing: SigningKey::from_bytes(&seed),
        }
    }

    pub fn public(&self) -> VerifyingKey {
        self.signing.verifying_key()
    }

    pub(crate) fn sign_report(
        &self,
        measurement: &EnclaveMeasurement,
        nonce: &Challenge,
        share: &KeyShare,
    ) -> [u8; 64] {
        self.signing
            .sign(&report_message(measurement, nonce, share))
            .to_bytes()
    }
}

fn report_message(
    measurement: &EnclaveMeasurement,
    nonce: &Challenge,
    share: &KeyShare,
) -> Vec<u8> {
    [REPORT_DOMAIN, measurement.as_bytes(), nonce, share].concat()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttestationReport {
    pub measurement: EnclaveMeasurement,
    pub challenge_nonce: Challenge,
    pub key_share: KeyShare,
    pub binding_tag: [u8; 64],
}

impl AttestationReport {
    /// Checks the binding tag against a root public key.
    pub fn verify_binding(&self, root: &VerifyingKey) -> Result<(), EnclaveError> {
        let sig = Signature::from_bytes(&self.binding_tag);
        root.verify(
            &report_message(&self.measurement, &self.challenge_nonce, &self.key_share),
            &sig,
        )
        .map_err(|_| EnclaveError::InvalidReport)
    }
}

pub(crate) fn derive_session(
    shared: &[u8; 32],
    measurement: &EnclaveMeasurement,
    nonce: &Challenge,
    enclave_share: &KeyShare,
    verifier_share: &KeyShare,
) -> SessionKey {
    let hk = Hkdf::<Sha256>::new(Some(measurement.as_bytes()), shared);
    let info = [SESSION_INFO, nonce, enclave_share, verifier_share].concat();
    let mut okm = [0u8; KEY_ID_LEN + 32];
    hk.expand(&info, &mut okm)
        .expect("48 bytes is a valid HKDF-SHA256 output length");
    let key_id: KeyId = okm[..KEY_ID_LEN].try_into().expect("slice length");
    let secret: [u8; 32] = okm[KEY_ID_LEN..].try_into().expect("slice length");
    SessionKey::new(key_id, secret)
}

/// Client-side verifier: issues challenges, checks reports, and derives the
/// session key that client gateways seal deposits under.
pub struct Verifier {
    expected: EnclaveMeasurement,
    root: VerifyingKey,
    outstanding: HashSet<Challenge>,
}

impl Verifier {
    pub fn new(expected: EnclaveMeasurement, root: VerifyingKey) -> Self {
        Verifier {
            expected,
            root,
            outstanding: HashSet::new(),
        }
    }

    pub fn expected(&self) -> &EnclaveMeasurement {
        &self.expected
    }

    /// Fresh random challenge; stays valid until one report answers it.
    pub fn challenge(&mut self) -> Challenge {
        let mut nonce = [0u8; 16];
        OsRng.fill_bytes(&mut nonce);
        self.outstanding.insert(nonce);
        nonce
    }

    /// Verifies signature and measurement, then consumes the challenge the
    /// report answers. A report whose challenge was already consumed or never
    /// issued is rejected as stale.
    pub fn verify_report(&mut self, report: &AttestationReport) -> Result<(), EnclaveError> {
        report.verify_binding(&self.root)?;
        if report.measurement != self.expected {
            return Err(EnclaveError::MeasurementMismatch);
        }
        if !self.outstanding.remove(&report.challenge_nonce) {
            return Err(EnclaveError::StaleNonce);
        }
        Ok(())
    }

    /// Verifies the report and completes key agreement. Returns the session
    /// key and the share to send back to the runtime.
    pub fn establish_session(
        &mut self,
        report: &AttestationReport,
    ) -> Result<(SessionKey, KeyShare), EnclaveError> {
        self.verify_report(report)?;
        let secret = EphemeralSecret::random_from_rng(OsRng);
        let share = PublicKey::from(&secret).to_bytes();
        let shared = secret.diffie_hellman(&PublicKey::from(report.key_share));
        let key = derive_session(
            shared.as_bytes(),
            &report.measurement,
            &report.challenge_nonce,
            &report.key_share,
            &share,
        );
        Ok((key, share))
    }
}
