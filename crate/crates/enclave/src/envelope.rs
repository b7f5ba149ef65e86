//! Authenticated-encryption envelopes crossing the trust boundary.
//!
//! Wire layout, lengths little-endian:
//!
//! ```text
//! key_id(8) ‖ nonce(12) ‖ aad_len(4) ‖ aad ‖ ct_len(8) ‖ ciphertext ‖ tag(16)
//! ```
//!
//! Nonces are `sender(4, BE) ‖ counter(8, BE)`. Every party sealing under a
//! session key owns a distinct sender id, and its counter only moves
//! forward, so a nonce never repeats under one key.

use std::fmt;

use cardio_core::wire::{WireReader, WireWriter};
use cardio_core::ClientId;
use chacha20poly1305::aead::{AeadInPlace, KeyInit};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce, Tag};

use crate::error::EnclaveError;

pub const KEY_ID_LEN: usize = 8;
pub const NONCE_LEN: usize = 12;
pub const TAG_LEN: usize = 16;
/// Fixed bytes of an envelope besides aad and ciphertext.
pub const ENVELOPE_OVERHEAD: usize = KEY_ID_LEN + NONCE_LEN + 4 + 8 + TAG_LEN;

/// Sender id reserved for the trusted runtime.
pub const RUNTIME_SENDER: u32 = u32::MAX;

pub type KeyId = [u8; KEY_ID_LEN];

/// Symmetric session key. Never serialized; `Debug` shows the id only.
#[derive(Clone, PartialEq, Eq)]
pub struct SessionKey {
    pub key_id: KeyId,
    pub(crate) secret: [u8; 32],
}

impl SessionKey {
    pub(crate) fn new(key_id: KeyId, secret: [u8; 32]) -> Self {
        SessionKey { key_id, secret }
    }

    /// Creates a sealer for one sending party. Callers must not hand the
    /// same sender id to two parties.
    pub fn sealer(&self, sender: u32) -> Sealer {
        Sealer {
            key: self.clone(),
            sender,
            counter: 0,
        }
    }

    fn cipher(&self) -> ChaCha20Poly1305 {
        ChaCha20Poly1305::new(Key::from_slice(&self.secret))
    }
}

impl fmt::Debug for SessionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SessionKey")
            .field("key_id", &self.key_id)
            .finish_non_exhaustive()
    }
}

/// What a sealed message is for; part of the associated data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Host to trusted runtime: a whole batch.
    Task = 1,
    /// Client gateway deposit; the window field carries the file sequence.
    Deposit = 2,
    /// Trusted runtime reply carrying a result body.
    Reply = 3,
    /// Trusted runtime reply for a failed batch. The cause is inside.
    ErrorReply = 4,
}

impl Direction {
    fn from_u8(v: u8) -> Option<Self> {
        Some(match v {
            1 => Direction::Task,
            2 => Direction::Deposit,
            3 => Direction::Reply,
            4 => Direction::ErrorReply,
            _ => return None,
        })
    }
}

/// Associated data binding an envelope to a stream position.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChannelAad {
    pub client_id: ClientId,
    pub window_id: u64,
    pub direction: Direction,
}

impl ChannelAad {
    pub fn new(client_id: ClientId, window_id: u64, direction: Direction) -> Self {
        ChannelAad {
            client_id,
            window_id,
            direction,
        }
    }

    /// `direction(1) ‖ window_id(8, LE) ‖ client id bytes`
    pub fn encode(&self) -> Vec<u8> {
        let mut w = WireWriter::with_capacity(9 + self.client_id.as_str().len());
        w.u8(self.direction as u8)
            .u64(self.window_id)
            .raw(self.client_id.as_str().as_bytes());
        w.finish()
    }

    pub fn decode(bytes: &[u8]) -> Option<Self> {
        let mut r = WireReader::new(bytes);
        let direction = Direction::from_u8(r.u8().ok()?)?;
        let window_id = r.u64().ok()?;
        let client = std::str::from_utf8(r.take(r.remaining()).ok()?).ok()?;
        Some(ChannelAad {
            client_id: ClientId::new(client).ok()?,
            window_id,
            direction,
        })
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct CipherEnvelope {
    pub key_id: KeyId,
    pub nonce: [u8; NONCE_LEN],
    pub aad: Vec<u8>,
    pub ciphertext: Vec<u8>,
    pub tag: [u8; TAG_LEN],
}

impl fmt::Debug for CipherEnvelope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CipherEnvelope")
            .field("key_id", &self.key_id)
            .field("nonce", &self.nonce)
            .field("aad_len", &self.aad.len())
            .field("ct_len", &self.ciphertext.len())
            .finish()
    }
}

impl CipherEnvelope {
    pub fn wire_len(&self) -> usize {
        ENVELOPE_OVERHEAD + self.aad.len() + self.ciphertext.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = WireWriter::with_capacity(self.wire_len());
        w.raw(&self.key_id)
            .raw(&self.nonce)
            .u32(self.aad.len() as u32)
            .raw(&self.aad)
            .u64(self.ciphertext.len() as u64)
            .raw(&self.ciphertext)
            .raw(&self.tag);
        w.finish()
    }

    /// Decodes one envelope that must span `bytes` exactly.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, EnclaveError> {
        let mut r = WireReader::new(bytes);
        let env = Self::read(&mut r)?;
        r.finish()
            .map_err(|e| EnclaveError::MalformedEnvelope(e.to_string()))?;
        Ok(env)
    }

    pub fn read(r: &mut WireReader<'_>) -> Result<Self, EnclaveError> {
        let bad = |e: cardio_core::wire::WireError| EnclaveError::MalformedEnvelope(e.to_string());
        let key_id = r.array().map_err(bad)?;
        let nonce = r.array().map_err(bad)?;
        let aad_len = r.u32().map_err(bad)? as usize;
        let aad = r.take(aad_len).map_err(bad)?.to_vec();
        let ct_len = usize::try_from(r.u64().map_err(bad)?)
            .map_err(|_| EnclaveError::MalformedEnvelope("ciphertext length overflow".into()))?;
        let ciphertext = r.take(ct_len).map_err(bad)?.to_vec();
        let tag = r.array().map_err(bad)?;
        Ok(CipherEnvelope {
            key_id,
            nonce,
            aad,
            ciphertext,
            tag,
        })
    }

    pub fn write(&self, w: &mut WireWriter) {
        w.raw(&self.to_bytes());
    }

    /// Associated data as claimed by the envelope. Unauthenticated until opened.
    pub fn claimed_aad(&self) -> Option<ChannelAad> {
        ChannelAad::decode(&self.aad)
    }
}

/// Seals under one key with a monotonically increasing nonce.
#[derive(Debug)]
pub struct Sealer {
    key: SessionKey,
    sender: u32,
    counter: u64,
}

impl Sealer {
    /// Resumes sealing at a given counter value.
    pub fn with_counter(mut self, counter: u64) -> Self {
        self.counter = counter;
        self
    }

    pub fn key_id(&self) -> KeyId {
        self.key.key_id
    }

    pub fn seal(&mut self, plaintext: &[u8], aad: &[u8]) -> Result<CipherEnvelope, EnclaveError> {
        if self.counter == u64::MAX {
            return Err(EnclaveError::NonceExhausted);
        }
        let mut nonce = [0u8; NONCE_LEN];
        nonce[..4].copy_from_slice(&self.sender.to_be_bytes());
        nonce[4..].copy_from_slice(&self.counter.to_be_bytes());
        self.counter += 1;

        let mut ciphertext = plaintext.to_vec();
        let tag = self
            .key
            .cipher()
            .encrypt_in_place_detached(Nonce::from_slice(&nonce), aad, &mut ciphertext)
            .map_err(|_| EnclaveError::AuthenticationFailure)?;
        Ok(CipherEnvelope {
            key_id: self.key.key_id,
            nonce,
            aad: aad.to_vec(),
            ciphertext,
            tag: tag.into(),
        })
    }

    pub fn seal_for(
        &mut self,
        plaintext: &[u8],
        aad: &ChannelAad,
    ) -> Result<CipherEnvelope, EnclaveError> {
        self.seal(plaintext, &aad.encode())
    }
}

/// Opens an envelope, returning the plaintext or nothing at all.
pub fn open(
    envelope: &CipherEnvelope,
    key: &SessionKey,
    aad: &[u8],
) -> Result<Vec<u8>, EnclaveError> {
    if envelope.key_id != key.key_id {
        return Err(EnclaveError::UnknownKeyId);
    }
    if envelope.aad != aad {
        return Err(EnclaveError::AuthenticationFailure);
    }
    let mut buf = envelope.ciphertext.clone();
    key.cipher()
        .decrypt_in_place_detached(
            Nonce::from_slice(&envelope.nonce),
            aad,
            &mut buf,
            Tag::from_slice(&envelope.tag),
        )
        .map_err(|_| EnclaveError::AuthenticationFailure)?;
    Ok(buf)
}

pub fn open_for(
    envelope: &CipherEnvelope,
    key: &SessionKey,
    aad: &ChannelAad,
) -> Result<Vec<u8>, EnclaveError> {
    open(envelope, key, &aad.encode())
}
