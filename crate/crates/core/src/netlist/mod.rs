//! Gate-level circuit IR for dual-rail asynchronous logic.
//!
//! A [`Netlist`] is an immutable graph of typed gates connected by nets.
//! Gate and net ids are dense integers assigned in creation order. The
//! fanout/driver view ([`Net`]) is derived once at construction.
//!
//! Nets are driven by exactly one of: a gate output, the environment
//! (input port rails, `ack_in`, the phase line) or a constant level.

mod builder;
mod encoding;
pub mod serial;
mod transform;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use builder::NetlistBuilder;
pub use encoding::{decode, encode, DualRailValue, Protocol};
pub use transform::dualize;
pub use validate::{validate, Diagnostic, DiagnosticKind};

use crate::multiplier::MultiplierSpec;

/// Index of a net inside its netlist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NetId(pub u32);

/// Index of a gate inside its netlist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GateId(pub u32);

impl NetId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl GateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for GateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "g{}", self.0)
    }
}

/// Primitive gate kinds.
///
/// AND and OR come in matching arities so that every netlist has a
/// dual. C-elements are the only stateful kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GateKind {
    #[serde(rename = "AND2")]
    And2,
    #[serde(rename = "AND3")]
    And3,
    #[serde(rename = "AND4")]
    And4,
    #[serde(rename = "OR2")]
    Or2,
    #[serde(rename = "OR3")]
    Or3,
    #[serde(rename = "OR4")]
    Or4,
    #[serde(rename = "NOT")]
    Not,
    #[serde(rename = "BUF")]
    Buf,
    #[serde(rename = "C2")]
    C2,
    #[serde(rename = "C3")]
    C3,
}

impl GateKind {
    pub const ALL: [GateKind; 10] = [
        GateKind::And2,
        GateKind::And3,
        GateKind::And4,
        GateKind::Or2,
        GateKind::Or3,
        GateKind::Or4,
        GateKind::Not,
        GateKind::Buf,
        GateKind::C2,
        GateKind::C3,
    ];

    pub fn arity(self) -> usize {
        match self {
            GateKind::Not | GateKind::Buf => 1,
            GateKind::And2 | GateKind::Or2 | GateKind::C2 => 2,
            GateKind::And3 | GateKind::Or3 | GateKind::C3 => 3,
            GateKind::And4 | GateKind::Or4 => 4,
        }
    }

    pub fn is_stateful(self) -> bool {
        matches!(self, GateKind::C2 | GateKind::C3)
    }

    pub fn is_and(self) -> bool {
        matches!(self, GateKind::And2 | GateKind::And3 | GateKind::And4)
    }

    pub fn is_or(self) -> bool {
        matches!(self, GateKind::Or2 | GateKind::Or3 | GateKind::Or4)
    }

    /// The De Morgan dual: AND and OR of equal arity swap, everything
    /// else maps to itself.
    pub fn dual(self) -> GateKind {
        match self {
            GateKind::And2 => GateKind::Or2,
            GateKind::And3 => GateKind::Or3,
            GateKind::And4 => GateKind::Or4,
            GateKind::Or2 => GateKind::And2,
            GateKind::Or3 => GateKind::And3,
            GateKind::Or4 => GateKind::And4,
            other => other,
        }
    }

    /// Controlling input value of an AND/OR gate: the level that alone
    /// decides the output.
    pub fn controlling_value(self) -> Option<bool> {
        if self.is_or() {
            Some(true)
        } else if self.is_and() {
            Some(false)
        } else {
            None
        }
    }

    pub fn or_of_arity(arity: usize) -> Option<GateKind> {
        match arity {
            2 => Some(GateKind::Or2),
            3 => Some(GateKind::Or3),
            4 => Some(GateKind::Or4),
            _ => None,
        }
    }

    /// Next output level given the input levels and the current output.
    /// C-elements follow their inputs when they agree and hold otherwise.
    pub fn eval(self, inputs: impl IntoIterator<Item = bool>, current: bool) -> bool {
        let mut it = inputs.into_iter();
        match self {
            GateKind::And2 | GateKind::And3 | GateKind::And4 => it.all(|v| v),
            GateKind::Or2 | GateKind::Or3 | GateKind::Or4 => it.any(|v| v),
            GateKind::Not => !it.next().unwrap_or(false),
            GateKind::Buf => it.next().unwrap_or(false),
            GateKind::C2 | GateKind::C3 => {
                let first = match it.next() {
                    Some(v) => v,
                    None => return current,
                };
                if it.all(|v| v == first) {
                    first
                } else {
                    current
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::And2 => "AND2",
            GateKind::And3 => "AND3",
            GateKind::And4 => "AND4",
            GateKind::Or2 => "OR2",
            GateKind::Or3 => "OR3",
            GateKind::Or4 => "OR4",
            GateKind::Not => "NOT",
            GateKind::Buf => "BUF",
            GateKind::C2 => "C2",
            GateKind::C3 => "C3",
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    pub id: GateId,
    pub kind: GateKind,
    pub inputs: Vec<NetId>,
    pub output: NetId,
    /// Output level after reset.
    pub reset: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Driver {
    Gate(GateId),
    /// Driven by the environment (harness or test bench).
    Primary,
    Constant(bool),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Net {
    pub id: NetId,
    /// `None` when nothing drives the net.
    pub driver: Option<Driver>,
    /// `(gate, input slot)` pairs reading this net.
    pub fanout: Vec<(GateId, usize)>,
    /// Set when the net forks to two or more gate inputs.
    pub isochronic: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PortDir {
    #[serde(rename = "in")]
    In,
    #[serde(rename = "out")]
    Out,
}

/// One dual-rail encoded bit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualRailPort {
    pub name: String,
    #[serde(rename = "dir")]
    pub direction: PortDir,
    pub rail1: NetId,
    pub rail0: NetId,
}

/// Rail pair without a name, as passed between cell constructors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rails {
    pub rail1: NetId,
    pub rail0: NetId,
}

impl DualRailPort {
    pub fn rails(&self) -> Rails {
        Rails {
            rail1: self.rail1,
            rail0: self.rail0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantNet {
    pub net: NetId,
    #[serde(with = "serial::bit")]
    pub level: bool,
}

/// What a tagged group of gates implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    And2Strong,
    FullAdderDims,
    FullAdderWeak,
    /// Majority-carry adder; only used as a negative control.
    FullAdderMajority,
    ConstantSource,
    RegisterBank,
    CompletionDetector,
}

impl CellKind {
    pub fn is_full_adder(self) -> bool {
        matches!(
            self,
            CellKind::FullAdderDims | CellKind::FullAdderWeak | CellKind::FullAdderMajority
        )
    }
}

/// A cell placed inside a larger netlist: its gate id range and ports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellInstance {
    pub kind: CellKind,
    pub name: String,
    /// Half-open gate id range `[first, last)`.
    pub gates: (u32, u32),
    pub ports: Vec<DualRailPort>,
}

impl CellInstance {
    pub fn gate_ids(&self) -> impl Iterator<Item = GateId> {
        (self.gates.0..self.gates.1).map(GateId)
    }

    pub fn port(&self, name: &str) -> Option<&DualRailPort> {
        self.ports.iter().find(|p| p.name == name)
    }
}

/// Descriptive data carried alongside the circuit.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub name: String,
    /// Constructor name when the netlist is a standalone cell.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<MultiplierSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub instances: Vec<CellInstance>,
    /// Free-form record of how the artifact was produced.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
}

/// Immutable gate-level circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct Netlist {
    protocol: Protocol,
    gates: Vec<Gate>,
    net_count: usize,
    input_ports: Vec<DualRailPort>,
    output_ports: Vec<DualRailPort>,
    ack_out: Option<NetId>,
    ack_in: Option<NetId>,
    phase: Option<NetId>,
    constants: Vec<ConstantNet>,
    meta: Meta,
    nets: Vec<Net>,
}

/// Raw parts used to assemble a [`Netlist`].
#[derive(Debug, Clone, Default)]
pub struct NetlistParts {
    pub protocol: Protocol,
    pub gates: Vec<Gate>,
    pub net_count: usize,
    pub ports: Vec<DualRailPort>,
    pub ack_out: Option<NetId>,
    pub ack_in: Option<NetId>,
    pub phase: Option<NetId>,
    pub constants: Vec<ConstantNet>,
    pub meta: Meta,
}

impl Netlist {
    /// Assemble a netlist. No well-formedness checks happen here; run
    /// [`validate`] before simulating.
    pub fn from_parts(parts: NetlistParts) -> Netlist {
        let NetlistParts {
            protocol,
            gates,
            net_count,
            ports,
            ack_out,
            ack_in,
            phase,
            constants,
            meta,
        } = parts;
        let (input_ports, output_ports) = ports
            .into_iter()
            .partition(|p| p.direction == PortDir::In);
        let mut netlist = Netlist {
            protocol,
            gates,
            net_count,
            input_ports,
            output_ports,
            ack_out,
            ack_in,
            phase,
            constants,
            meta,
            nets: Vec::new(),
        };
        netlist.nets = netlist.derive_nets();
        netlist
    }

    pub fn into_parts(self) -> NetlistParts {
        let mut ports = self.input_ports;
        ports.extend(self.output_ports);
        NetlistParts {
            protocol: self.protocol,
            gates: self.gates,
            net_count: self.net_count,
            ports,
            ack_out: self.ack_out,
            ack_in: self.ack_in,
            phase: self.phase,
            constants: self.constants,
            meta: self.meta,
        }
    }

    fn derive_nets(&self) -> Vec<Net> {
        let mut nets: Vec<Net> = (0..self.net_count)
            .map(|i| Net {
                id: NetId(i as u32),
                driver: None,
                fanout: Vec::new(),
                isochronic: false,
            })
            .collect();
        let mut claim = |net: NetId, driver: Driver| {
            if let Some(n) = nets.get_mut(net.index()) {
                n.driver.get_or_insert(driver);
            }
        };
        for gate in &self.gates {
            claim(gate.output, Driver::Gate(gate.id));
        }
        for net in self.primary_inputs() {
            claim(net, Driver::Primary);
        }
        for c in &self.constants {
            claim(c.net, Driver::Constant(c.level));
        }
        for gate in &self.gates {
            for (slot, &input) in gate.inputs.iter().enumerate() {
                if let Some(n) = nets.get_mut(input.index()) {
                    n.fanout.push((gate.id, slot));
                }
            }
        }
        for n in &mut nets {
            n.isochronic = n.fanout.len() >= 2;
        }
        nets
    }

    pub fn protocol(&self) -> Protocol {
        self.protocol
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn gate(&self, id: GateId) -> &Gate {
        &self.gates[id.index()]
    }

    pub fn nets(&self) -> &[Net] {
        &self.nets
    }

    pub fn net(&self, id: NetId) -> &Net {
        &self.nets[id.index()]
    }

    pub fn net_count(&self) -> usize {
        self.net_count
    }

    pub fn input_ports(&self) -> &[DualRailPort] {
        &self.input_ports
    }

    pub fn output_ports(&self) -> &[DualRailPort] {
        &self.output_ports
    }

    pub fn ports(&self) -> impl Iterator<Item = &DualRailPort> {
        self.input_ports.iter().chain(&self.output_ports)
    }

    pub fn ack_out(&self) -> Option<NetId> {
        self.ack_out
    }

    pub fn ack_in(&self) -> Option<NetId> {
        self.ack_in
    }

    /// Environment-driven line that tells constant sources whether the
    /// current half-cycle carries data or spacer.
    pub fn phase(&self) -> Option<NetId> {
        self.phase
    }

    pub fn constants(&self) -> &[ConstantNet] {
        &self.constants
    }

    pub fn meta(&self) -> &Meta {
        &self.meta
    }

    pub fn name(&self) -> &str {
        &self.meta.name
    }

    pub fn with_meta(mut self, meta: Meta) -> Netlist {
        self.meta = meta;
        self
    }

    /// Nets the environment drives.
    pub fn primary_inputs(&self) -> Vec<NetId> {
        let mut nets: Vec<NetId> = self
            .input_ports
            .iter()
            .flat_map(|p| [p.rail1, p.rail0])
            .collect();
        nets.extend(self.ack_in);
        nets.extend(self.phase);
        nets
    }

    pub fn is_primary_input(&self, net: NetId) -> bool {
        matches!(
            self.nets.get(net.index()).and_then(|n| n.driver),
            Some(Driver::Primary)
        )
    }

    /// Level the net holds right after reset.
    pub fn reset_level(&self, net: NetId) -> bool {
        match self.nets.get(net.index()).and_then(|n| n.driver) {
            Some(Driver::Gate(g)) => self.gate(g).reset,
            Some(Driver::Constant(level)) => level,
            Some(Driver::Primary) if Some(net) == self.ack_in => self.ack_in_reset(),
            Some(Driver::Primary) => self.protocol.spacer_level(),
            None => false,
        }
    }

    /// `ack_in` idles at the complement of the reset level of `ack_out`.
    pub fn ack_in_reset(&self) -> bool {
        match self.ack_out {
            Some(out) => match self.nets.get(out.index()).and_then(|n| n.driver) {
                Some(Driver::Gate(g)) => !self.gate(g).reset,
                _ => !self.protocol.spacer_level(),
            },
            None => !self.protocol.spacer_level(),
        }
    }

    pub fn instances(&self) -> &[CellInstance] {
        &self.meta.instances
    }

    /// Gate count per kind.
    pub fn census(&self) -> BTreeMap<GateKind, usize> {
        let mut census = BTreeMap::new();
        for g in &self.gates {
            *census.entry(g.kind).or_insert(0) += 1;
        }
        census
    }

    pub fn c_element_count(&self) -> usize {
        self.gates.iter().filter(|g| g.kind.is_stateful()).count()
    }

    /// True when the netlist carries a completion detector and an
    /// acknowledge input, i.e. it can be driven by the handshake harness.
    pub fn has_handshake(&self) -> bool {
        self.ack_out.is_some() && self.ack_in.is_some()
    }
}
