use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Rails;

/// 4-phase handshake flavour.
///
/// RTZ idles at all-zero rails and signals data with a rising rail. RTO is
/// the exact complement: it idles at all-one and signals data with a
/// falling rail.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    #[default]
    Rtz,
    Rto,
}

impl Protocol {
    /// Level of both rails of a spacer.
    pub fn spacer_level(self) -> bool {
        matches!(self, Protocol::Rto)
    }

    /// Level of the phase line while data is being presented.
    pub fn data_phase_level(self) -> bool {
        !self.spacer_level()
    }

    /// `ack_out` level once every monitored port holds data.
    pub fn ack_data_level(self) -> bool {
        matches!(self, Protocol::Rtz)
    }

    pub fn flip(self) -> Protocol {
        match self {
            Protocol::Rtz => Protocol::Rto,
            Protocol::Rto => Protocol::Rtz,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Rtz => "rtz",
            Protocol::Rto => "rto",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rtz" => Ok(Protocol::Rtz),
            "rto" => Ok(Protocol::Rto),
            other => Err(format!("unknown protocol `{other}` (expected rtz or rto)")),
        }
    }
}

/// Logical reading of one rail pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DualRailValue {
    Data0,
    Data1,
    Spacer,
    Illegal,
}

impl DualRailValue {
    pub fn is_data(self) -> bool {
        matches!(self, DualRailValue::Data0 | DualRailValue::Data1)
    }

    pub fn bit(self) -> Option<bool> {
        match self {
            DualRailValue::Data0 => Some(false),
            DualRailValue::Data1 => Some(true),
            _ => None,
        }
    }
}

/// Rail levels `(rail1, rail0)` carrying `bit` under `protocol`.
pub fn encode(bit: bool, protocol: Protocol) -> (bool, bool) {
    let rtz = (bit, !bit);
    match protocol {
        Protocol::Rtz => rtz,
        Protocol::Rto => (!rtz.0, !rtz.1),
    }
}

pub fn decode(levels: (bool, bool), protocol: Protocol) -> DualRailValue {
    let (r1, r0) = match protocol {
        Protocol::Rtz => levels,
        Protocol::Rto => (!levels.0, !levels.1),
    };
    match (r1, r0) {
        (true, false) => DualRailValue::Data1,
        (false, true) => DualRailValue::Data0,
        (false, false) => DualRailValue::Spacer,
        (true, true) => DualRailValue::Illegal,
    }
}

impl Rails {
    /// Net carrying the level change for `bit` (the rail that leaves the
    /// spacer level).
    pub fn active(&self, bit: bool) -> super::NetId {
        if bit {
            self.rail1
        } else {
            self.rail0
        }
    }
}
