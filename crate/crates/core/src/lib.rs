//! Dual-rail quasi-delay-insensitive array multipliers: netlist model,
//! cell library, generator, event-driven simulation, handshake harness,
//! verification checks and metrics.

pub mod cells;
pub mod harness;
pub mod metrics;
pub mod multiplier;
pub mod netlist;
pub mod sim;
pub mod verify;

pub use cells::FullAdderKind;
pub use harness::{CycleReport, EnvMode, Harness};
pub use metrics::{AreaTable, MetricsReport};
pub use multiplier::{critical_path, generate, structure_stats, MultiplierSpec, StructureStats};
pub use netlist::{dualize, validate, DualRailValue, GateKind, Netlist, Protocol};
pub use sim::{DelayModel, SimState};
pub use verify::{CheckOutcome, Counterexample, Coverage};

/// Version recorded in every artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
