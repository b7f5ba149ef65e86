use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::HrvError;

/// Where the analysis runs relative to the trust boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExecutionMode {
    /// Everything in one process, no trusted component.
    Baseline,
    /// Host plus trusted component over an unencrypted channel.
    SplitPlain,
    /// Host plus attested trusted component over a sealed channel.
    SplitEncrypted,
}

impl ExecutionMode {
    pub const ALL: [ExecutionMode; 3] = [
        ExecutionMode::Baseline,
        ExecutionMode::SplitPlain,
        ExecutionMode::SplitEncrypted,
    ];

    /// Short name used on the command line and in reports.
    pub fn short_name(self) -> &'static str {
        match self {
            ExecutionMode::Baseline => "baseline",
            ExecutionMode::SplitPlain => "split",
            ExecutionMode::SplitEncrypted => "enclave",
        }
    }
}

impl fmt::Display for ExecutionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for ExecutionMode {
    type Err = HrvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "baseline" => Ok(ExecutionMode::Baseline),
            "split" | "splitplain" | "split_plain" => Ok(ExecutionMode::SplitPlain),
            "enclave" | "splitencrypted" | "split_encrypted" => Ok(ExecutionMode::SplitEncrypted),
            other => Err(HrvError::InvalidSeries(format!(
                "unknown execution mode {other:?}"
            ))),
        }
    }
}
