use std::fmt;

use cardio_core::AnalysisAlgorithm;
use sha2::{Digest, Sha256};

/// Build tag of the engine the algorithms are compiled into.
pub const ENGINE_BUILD_TAG: &[u8] = concat!("cardio-engine/", env!("CARGO_PKG_VERSION")).as_bytes();

const DOMAIN: &[u8] = b"cardio.measurement.v1";

/// SHA-256 over (algorithm, version, build tag).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct EnclaveMeasurement(pub [u8; 32]);

impl EnclaveMeasurement {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

impl fmt::Debug for EnclaveMeasurement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EnclaveMeasurement(")?;
        for b in &self.0[..8] {
            write!(f, "{b:02x}")?;
        }
        write!(f, "…)")
    }
}

pub fn measure_code(algorithm: AnalysisAlgorithm, build_tag: &[u8]) -> EnclaveMeasurement {
    let mut h = Sha256::new();
    h.update(DOMAIN);
    h.update([algorithm.kind.code()]);
    h.update(algorithm.version.to_le_bytes());
    h.update((build_tag.len() as u64).to_le_bytes());
    h.update(build_tag);
    EnclaveMeasurement(h.finalize().into())
}
