//! RR-interval samples and per-client series.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::HrvError;
use crate::scalar::Scalar;

/// Opaque client identifier.
///
/// Identifiers appear in file names (`<client_id>_<seq>.csv`), so they are
/// restricted to ASCII alphanumerics plus `-`, `_` and `.`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ClientId(String);

impl ClientId {
    pub const MAX_LEN: usize = 64;

    pub fn new(id: impl Into<String>) -> Result<Self, HrvError> {
        let id = id.into();
        let valid = !id.is_empty()
            && id.len() <= Self::MAX_LEN
            && id
                .bytes()
                .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'-' | b'_' | b'.'))
            && !id.starts_with('.');
        if valid {
            Ok(ClientId(id))
        } else {
            Err(HrvError::InvalidSeries(format!("invalid client id {id:?}")))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for ClientId {
    type Error = HrvError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        ClientId::new(value)
    }
}

impl From<ClientId> for String {
    fn from(id: ClientId) -> String {
        id.0
    }
}

impl fmt::Display for ClientId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// RR interval in fixed point: thousandths of a millisecond.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RrMillis(u32);

impl RrMillis {
    /// Largest value the `dddd.ddd` record field can carry.
    pub const MAX: RrMillis = RrMillis(9_999_999);

    pub const fn from_thousandths(thousandths: u32) -> Self {
        RrMillis(thousandths)
    }

    pub fn from_millis_f64(ms: f64) -> Self {
        let t = (ms * 1000.0).round();
        RrMillis(t.clamp(0.0, Self::MAX.0 as f64) as u32)
    }

    pub const fn thousandths(self) -> u32 {
        self.0
    }

    pub fn to_scalar<T: Scalar>(self) -> T {
        T::lit(self.0 as f64 / 1000.0)
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 1000.0
    }
}

impl fmt::Display for RrMillis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:03}", self.0 / 1000, self.0 % 1000)
    }
}

/// Physiologic plausibility range applied when parsing records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RrGuard {
    pub min: RrMillis,
    pub max: RrMillis,
}

impl RrGuard {
    pub fn contains(&self, rr: RrMillis) -> bool {
        rr.0 > 0 && rr >= self.min && rr <= self.max
    }
}

impl Default for RrGuard {
    fn default() -> Self {
        RrGuard {
            min: RrMillis::from_thousandths(200_000),
            max: RrMillis::from_thousandths(4_000_000),
        }
    }
}

/// One R peak: its timestamp and the interval since the previous peak.
///
/// The owning client is carried by [`RrSeries`] rather than repeated on
/// every sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RrSample {
    /// Epoch milliseconds of the R peak.
    pub t_ms: u64,
    pub rr: RrMillis,
}

impl RrSample {
    pub fn new(t_ms: u64, rr: RrMillis) -> Self {
        RrSample { t_ms, rr }
    }
}

/// Ordered samples of a single client.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RrSeries {
    client_id: ClientId,
    samples: Vec<RrSample>,
}

impl RrSeries {
    /// Builds a series, rejecting non-increasing timestamps.
    pub fn new(client_id: ClientId, samples: Vec<RrSample>) -> Result<Self, HrvError> {
        if let Some(w) = samples.windows(2).find(|w| w[1].t_ms <= w[0].t_ms) {
            return Err(HrvError::InvalidSeries(format!(
                "timestamps not strictly increasing: {} then {}",
                w[0].t_ms, w[1].t_ms
            )));
        }
        Ok(RrSeries { client_id, samples })
    }

    /// Sorts by timestamp before validating. Used when merging deposits.
    pub fn from_unordered(
        client_id: ClientId,
        mut samples: Vec<RrSample>,
    ) -> Result<Self, HrvError> {
        samples.sort_by_key(|s| s.t_ms);
        Self::new(client_id, samples)
    }

    pub fn empty(client_id: ClientId) -> Self {
        RrSeries {
            client_id,
            samples: Vec::new(),
        }
    }

    pub fn client_id(&self) -> &ClientId {
        &self.client_id
    }

    pub fn samples(&self) -> &[RrSample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<RrSample> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time between first and last R peak.
    pub fn span_ms(&self) -> u64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t_ms - a.t_ms,
            _ => 0,
        }
    }

    pub fn rr_values<T: Scalar>(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.rr.to_scalar()).collect()
    }
}
