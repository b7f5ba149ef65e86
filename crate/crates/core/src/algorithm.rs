use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::HrvError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmKind {
    Identity,
    Sdnn,
    HrvBands,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 3] = [
        AlgorithmKind::Identity,
        AlgorithmKind::Sdnn,
        AlgorithmKind::HrvBands,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmKind::Identity => "identity",
            AlgorithmKind::Sdnn => "sdnn",
            AlgorithmKind::HrvBands => "hrvbands",
        }
    }

    /// Stable one-byte code used in code measurements.
    pub fn code(self) -> u8 {
        match self {
            AlgorithmKind::Identity => 1,
            AlgorithmKind::Sdnn => 2,
            AlgorithmKind::HrvBands => 3,
        }
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgorithmKind {
    type Err = HrvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "identity" => Ok(AlgorithmKind::Identity),
            "sdnn" => Ok(AlgorithmKind::Sdnn),
            "hrvbands" | "hrv_bands" | "bands" => Ok(AlgorithmKind::HrvBands),
            other => Err(HrvError::InvalidSeries(format!(
                "unknown algorithm {other:?}"
            ))),
        }
    }
}

/// An analysis routine plus its version. The pair is what gets measured
/// when a trusted runtime is created.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnalysisAlgorithm {
    pub kind: AlgorithmKind,
    pub version: u16,
}

impl AnalysisAlgorithm {
    pub const CURRENT_VERSION: u16 = 1;

    pub const fn new(kind: AlgorithmKind, version: u16) -> Self {
        AnalysisAlgorithm { kind, version }
    }

    pub const fn current(kind: AlgorithmKind) -> Self {
        AnalysisAlgorithm::new(kind, Self::CURRENT_VERSION)
    }
}

impl From<AlgorithmKind> for AnalysisAlgorithm {
    fn from(kind: AlgorithmKind) -> Self {
        AnalysisAlgorithm::current(kind)
    }
}

impl fmt::Display for AnalysisAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)
    }
}

impl FromStr for AnalysisAlgorithm {
    type Err = HrvError;

    /// Accepts `sdnn` or `sdnn@2`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once('@') {
            Some((kind, version)) => {
                let version = version.parse().map_err(|_| {
                    HrvError::InvalidSeries(format!("bad algorithm version {version:?}"))
                })?;
                Ok(AnalysisAlgorithm::new(kind.parse()?, version))
            }
            None => Ok(AnalysisAlgorithm::current(s.parse()?)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_names() {
        assert_eq!(
            "SDNN".parse::<AlgorithmKind>().unwrap(),
            AlgorithmKind::Sdnn
        );
        assert_eq!(
            "hrvbands".parse::<AlgorithmKind>().unwrap(),
            AlgorithmKind::HrvBands
        );
        assert!("rmssd".parse::<AlgorithmKind>().is_err());
        let a: AnalysisAlgorithm = "sdnn@2".parse().unwrap();
        assert_eq!(a, AnalysisAlgorithm::new(AlgorithmKind::Sdnn, 2));
    }
}
