use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::netlist::{GateId, GateKind, Netlist};

pub const DEFAULT_RANDOM_RANGE: (u64, u64) = (1, 20);

/// Gate delay assignment in abstract integer time units.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DelayModel {
    #[default]
    Unit,
    FixedTable { table: BTreeMap<GateKind, u64> },
    RandomPerGate { lo: u64, hi: u64, seed: u64 },
}

impl DelayModel {
    pub fn random(seed: u64) -> Self {
        let (lo, hi) = DEFAULT_RANDOM_RANGE;
        DelayModel::RandomPerGate { lo, hi, seed }
    }

    /// Same model with a different seed. Non-random models are returned
    /// unchanged.
    pub fn reseeded(&self, seed: u64) -> Self {
        match *self {
            DelayModel::RandomPerGate { lo, hi, .. } => DelayModel::RandomPerGate { lo, hi, seed },
            ref other => other.clone(),
        }
    }

    pub fn check(&self) -> Result<(), SimError> {
        match self {
            DelayModel::Unit => Ok(()),
            DelayModel::FixedTable { table } => match table.iter().find(|(_, &d)| d == 0) {
                Some((kind, _)) => Err(SimError::BadDelay(format!("{kind} has delay 0"))),
                None => Ok(()),
            },
            DelayModel::RandomPerGate { lo, hi, .. } => {
                if *lo == 0 || lo > hi {
                    Err(SimError::BadDelay(format!("random range [{lo}, {hi}] is empty or contains 0")))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Delay of one gate. For the random model this depends only on the
    /// seed and the gate id.
    pub fn delay(&self, gate: GateId, kind: GateKind) -> Result<u64, SimError> {
        match self {
            DelayModel::Unit => Ok(1),
            DelayModel::FixedTable { table } => match table.get(&kind) {
                Some(&d) if d > 0 => Ok(d),
                Some(_) => Err(SimError::BadDelay(format!("{kind} has delay 0"))),
                None => Err(SimError::BadDelay(format!("no delay entry for {kind}"))),
            },
            DelayModel::RandomPerGate { lo, hi, seed } => {
                self.check()?;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_stream(gate.0 as u64);
                Ok(rng.random_range(*lo..=*hi))
            }
        }
    }

    pub fn delays(&self, netlist: &Netlist) -> Result<Vec<u64>, SimError> {
        self.check()?;
        netlist.gates().iter().map(|g| self.delay(g.id, g.kind)).collect()
    }

    /// Upper bound on any single gate delay under this model.
    pub fn max_delay(&self) -> u64 {
        match self {
            DelayModel::Unit => 1,
            DelayModel::FixedTable { table } => table.values().copied().max().unwrap_or(1),
            DelayModel::RandomPerGate { hi, .. } => *hi,
        }
    }
}

impl fmt::Display for DelayModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DelayModel::Unit => f.write_str("unit"),
            DelayModel::FixedTable { table } => {
                let entries: Vec<String> = table.iter().map(|(k, d)| format!("{k}={d}")).collect();
                write!(f, "table({})", entries.join(","))
            }
            DelayModel::RandomPerGate { lo, hi, seed } => write!(f, "random:{lo},{hi}@{seed}"),
        }
    }
}

/// Parses `unit` or `random:<lo>,<hi>`. Tables come from files and are
/// handled by the caller.
impl FromStr for DelayModel {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SimError::BadDelay(format!("cannot parse delay model `{s}`"));
        if s == "unit" {
            return Ok(DelayModel::Unit);
        }
        if s == "random" {
            return Ok(DelayModel::random(0));
        }
        let range = s.strip_prefix("random:").ok_or_else(bad)?;
        let (lo, hi) = range.split_once(',').ok_or_else(bad)?;
        let model = DelayModel::RandomPerGate {
            lo: lo.trim().parse().map_err(|_| bad())?,
            hi: hi.trim().parse().map_err(|_| bad())?,
            seed: 0,
        };
        model.check()?;
        Ok(model)
    }
}
