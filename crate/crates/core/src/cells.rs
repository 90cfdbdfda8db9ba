//! Indicating building blocks.
//!
//! Each cell has two entry points: a `*_into` function that places the
//! cell inside a [`NetlistBuilder`] (used by the multiplier generator) and
//! a `make_*` function returning a standalone [`CellHandle`]. Cells are
//! always built in RTZ polarity; the RTO version is the dual.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netlist::{
    dualize, CellKind, DualRailPort, Meta, NetId, Netlist, NetlistBuilder, PortDir,
    Protocol, Rails,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CellError {
    #[error("a {0} needs at least one port")]
    NoPorts(&'static str),
}

/// Full adder constructions available to the generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FullAdderKind {
    /// Eight shared minterm C-elements; both outputs wait for all inputs.
    Dims,
    /// Disjoint carry cover that can fire on two inputs; sum waits for all.
    Weak,
}

impl FullAdderKind {
    pub fn name(self) -> &'static str {
        match self {
            FullAdderKind::Dims => "dims",
            FullAdderKind::Weak => "weak",
        }
    }

    pub fn cell_kind(self) -> CellKind {
        match self {
            FullAdderKind::Dims => CellKind::FullAdderDims,
            FullAdderKind::Weak => CellKind::FullAdderWeak,
        }
    }
}

impl fmt::Display for FullAdderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FullAdderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dims" | "dims_strong" | "strong" => Ok(FullAdderKind::Dims),
            "weak" | "weak_disjoint" => Ok(FullAdderKind::Weak),
            other => Err(format!("unknown full adder `{other}` (expected dims or weak)")),
        }
    }
}

/// A standalone cell: its netlist plus port lookup by name.
#[derive(Debug, Clone, PartialEq)]
pub struct CellHandle {
    pub netlist: Netlist,
}

impl CellHandle {
    pub fn port(&self, name: &str) -> Option<&DualRailPort> {
        self.netlist.ports().find(|p| p.name == name)
    }

    pub fn protocol(&self) -> Protocol {
        self.netlist.protocol()
    }
}

fn port(name: &str, direction: PortDir, rails: Rails) -> DualRailPort {
    DualRailPort {
        name: name.to_string(),
        direction,
        rail1: rails.rail1,
        rail0: rails.rail0,
    }
}

fn finish_cell(
    builder: NetlistBuilder,
    cell: &str,
    params: &[(&str, serde_json::Value)],
    protocol: Protocol,
) -> CellHandle {
    let meta = Meta {
        name: format!("{cell}_{protocol}"),
        cell: Some(cell.to_string()),
        params: params
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .chain([("protocol".to_string(), protocol.name().into())])
            .collect(),
        ..Meta::default()
    };
    let rtz = builder.finish(meta);
    let netlist = match protocol {
        Protocol::Rtz => rtz,
        Protocol::Rto => dualize(&rtz),
    };
    CellHandle { netlist }
}

/// Strongly indicating dual-rail AND: one C2 per input minterm, the
/// `1`-minterm drives `Z1` and the other three are ORed into `Z0`.
pub fn and2_strong_into(b: &mut NetlistBuilder, name: &str, x: Rails, y: Rails) -> Rails {
    let first = b.gate_count();
    let m11 = b.c2(x.rail1, y.rail1);
    let m10 = b.c2(x.rail1, y.rail0);
    let m01 = b.c2(x.rail0, y.rail1);
    let m00 = b.c2(x.rail0, y.rail0);
    let z0 = b.or(&[m10, m01, m00]);
    let z = Rails {
        rail1: m11,
        rail0: z0,
    };
    b.tag(
        CellKind::And2Strong,
        name,
        first,
        vec![
            port("A", PortDir::In, x),
            port("B", PortDir::In, y),
            port("Z", PortDir::Out, z),
        ],
    );
    z
}

pub fn make_and2_strong(protocol: Protocol) -> CellHandle {
    let mut b = NetlistBuilder::new("and2_strong");
    let x = b.input("A");
    let y = b.input("B");
    let z = and2_strong_into(&mut b, "and", x, y);
    b.output("Z", z);
    finish_cell(b, "and2_strong", &[], protocol)
}

/// Minterm `m[4a + 2b + c]` over the three rail pairs.
fn minterms(b: &mut NetlistBuilder, x: Rails, y: Rails, c: Rails) -> [NetId; 8] {
    let mut out = [NetId(0); 8];
    for (m, slot) in out.iter_mut().enumerate() {
        *slot = b.c3(x.active(m & 4 != 0), y.active(m & 2 != 0), c.active(m & 1 != 0));
    }
    out
}

fn dims_sum(b: &mut NetlistBuilder, m: &[NetId; 8]) -> Rails {
    let rail1 = b.or(&[m[0b001], m[0b010], m[0b100], m[0b111]]);
    let rail0 = b.or(&[m[0b000], m[0b011], m[0b101], m[0b110]]);
    Rails { rail1, rail0 }
}

fn adder_ports(x: Rails, y: Rails, c: Rails, sum: Rails, cout: Rails) -> Vec<DualRailPort> {
    vec![
        port("a", PortDir::In, x),
        port("b", PortDir::In, y),
        port("cin", PortDir::In, c),
        port("sum", PortDir::Out, sum),
        port("cout", PortDir::Out, cout),
    ]
}

/// Place a full adder; returns `(sum, cout)`.
pub fn full_adder_into(
    b: &mut NetlistBuilder,
    kind: FullAdderKind,
    name: &str,
    x: Rails,
    y: Rails,
    c: Rails,
) -> (Rails, Rails) {
    let first = b.gate_count();
    let (sum, cout) = match kind {
        FullAdderKind::Dims => {
            let m = minterms(b, x, y, c);
            let sum = dims_sum(b, &m);
            let cout = Rails {
                rail1: b.or(&[m[0b011], m[0b101], m[0b110], m[0b111]]),
                rail0: b.or(&[m[0b000], m[0b001], m[0b010], m[0b100]]),
            };
            (sum, cout)
        }
        FullAdderKind::Weak => {
            // Pairwise disjoint carry terms: a&b | ~a&b&c | a&~b&c and dual.
            let g1 = b.c2(x.rail1, y.rail1);
            let p1 = b.c3(x.rail0, y.rail1, c.rail1);
            let q1 = b.c3(x.rail1, y.rail0, c.rail1);
            let g0 = b.c2(x.rail0, y.rail0);
            let p0 = b.c3(x.rail1, y.rail0, c.rail0);
            let q0 = b.c3(x.rail0, y.rail1, c.rail0);
            let cout = Rails {
                rail1: b.or(&[g1, p1, q1]),
                rail0: b.or(&[g0, p0, q0]),
            };
            let m = minterms(b, x, y, c);
            (dims_sum(b, &m), cout)
        }
    };
    b.tag(kind.cell_kind(), name, first, adder_ports(x, y, c, sum, cout));
    (sum, cout)
}

/// Majority-form carry: three C2s into one OR3 per rail. With all three
/// inputs at the same value two C2s fire into the same OR3, so one of the
/// transitions is never acknowledged. Kept only as a checker control.
pub fn majority_adder_into(
    b: &mut NetlistBuilder,
    name: &str,
    x: Rails,
    y: Rails,
    c: Rails,
) -> (Rails, Rails) {
    let first = b.gate_count();
    let ab1 = b.c2(x.rail1, y.rail1);
    let ac1 = b.c2(x.rail1, c.rail1);
    let bc1 = b.c2(y.rail1, c.rail1);
    let ab0 = b.c2(x.rail0, y.rail0);
    let ac0 = b.c2(x.rail0, c.rail0);
    let bc0 = b.c2(y.rail0, c.rail0);
    let cout = Rails {
        rail1: b.or(&[ab1, ac1, bc1]),
        rail0: b.or(&[ab0, ac0, bc0]),
    };
    let m = minterms(b, x, y, c);
    let sum = dims_sum(b, &m);
    b.tag(
        CellKind::FullAdderMajority,
        name,
        first,
        adder_ports(x, y, c, sum, cout),
    );
    (sum, cout)
}

fn adder_cell(
    cell: &str,
    protocol: Protocol,
    place: impl FnOnce(&mut NetlistBuilder, Rails, Rails, Rails) -> (Rails, Rails),
) -> CellHandle {
    let mut b = NetlistBuilder::new(cell);
    let x = b.input("a");
    let y = b.input("b");
    let c = b.input("cin");
    let (sum, cout) = place(&mut b, x, y, c);
    b.output("sum", sum);
    b.output("cout", cout);
    finish_cell(b, cell, &[], protocol)
}

pub fn make_full_adder(kind: FullAdderKind, protocol: Protocol) -> CellHandle {
    let cell = format!("full_adder_{kind}");
    adder_cell(&cell, protocol, |b, x, y, c| {
        full_adder_into(b, kind, "fa", x, y, c)
    })
}

pub fn make_majority_adder(protocol: Protocol) -> CellHandle {
    adder_cell("full_adder_majority", protocol, |b, x, y, c| {
        majority_adder_into(b, "fa", x, y, c)
    })
}

/// One OR2 per port merged by a balanced C2 tree; returns the root.
pub fn completion_detector_into(b: &mut NetlistBuilder, name: &str, ports: &[Rails]) -> NetId {
    let first = b.gate_count();
    let leaves: Vec<NetId> = ports.iter().map(|p| b.or(&[p.rail1, p.rail0])).collect();
    let root = b.c_tree(&leaves);
    let tagged = ports
        .iter()
        .enumerate()
        .map(|(i, &p)| port(&format!("in[{i}]"), PortDir::In, p))
        .collect();
    b.tag(CellKind::CompletionDetector, name, first, tagged);
    root
}

pub fn make_completion_detector(n_ports: usize, protocol: Protocol) -> Result<CellHandle, CellError> {
    if n_ports == 0 {
        return Err(CellError::NoPorts("completion detector"));
    }
    let mut b = NetlistBuilder::new("completion_detector");
    let ports: Vec<Rails> = (0..n_ports).map(|i| b.input(format!("in[{i}]"))).collect();
    let root = completion_detector_into(&mut b, "cd", &ports);
    b.set_ack_out(root);
    Ok(finish_cell(
        b,
        "completion_detector",
        &[("n_ports", n_ports.into())],
        protocol,
    ))
}

/// One C2 per rail, gated by `ack_in`.
pub fn register_bank_into(
    b: &mut NetlistBuilder,
    name: &str,
    ports: &[Rails],
    ack_in: NetId,
) -> Vec<Rails> {
    let first = b.gate_count();
    let outs: Vec<Rails> = ports
        .iter()
        .map(|p| Rails {
            rail1: b.c2(p.rail1, ack_in),
            rail0: b.c2(p.rail0, ack_in),
        })
        .collect();
    let mut tagged = Vec::with_capacity(ports.len() * 2);
    for (i, (&p, &o)) in ports.iter().zip(&outs).enumerate() {
        tagged.push(port(&format!("in[{i}]"), PortDir::In, p));
        tagged.push(port(&format!("out[{i}]"), PortDir::Out, o));
    }
    b.tag(CellKind::RegisterBank, name, first, tagged);
    outs
}

pub fn make_register_bank(n_ports: usize, protocol: Protocol) -> Result<CellHandle, CellError> {
    if n_ports == 0 {
        return Err(CellError::NoPorts("register bank"));
    }
    let mut b = NetlistBuilder::new("register_bank");
    let ack = b.ack_in();
    let ins: Vec<Rails> = (0..n_ports).map(|i| b.input(format!("in[{i}]"))).collect();
    let outs = register_bank_into(&mut b, "regs", &ins, ack);
    for (i, o) in outs.into_iter().enumerate() {
        b.output(format!("out[{i}]"), o);
    }
    Ok(finish_cell(
        b,
        "register_bank",
        &[("n_ports", n_ports.into())],
        protocol,
    ))
}

/// Dual-rail constant that follows the environment phase line: the
/// codeword for `bit` during data, spacer otherwise.
pub fn constant_source_into(b: &mut NetlistBuilder, name: &str, bit: bool) -> Rails {
    let first = b.gate_count();
    let phase = b.phase();
    let idle = b.constant(false);
    let rails = if bit {
        Rails {
            rail1: phase,
            rail0: idle,
        }
    } else {
        Rails {
            rail1: idle,
            rail0: phase,
        }
    };
    b.tag(
        CellKind::ConstantSource,
        name,
        first,
        vec![port("out", PortDir::Out, rails)],
    );
    rails
}

pub fn make_constant_source(bit: bool, protocol: Protocol) -> CellHandle {
    let mut b = NetlistBuilder::new("constant_source");
    let rails = constant_source_into(&mut b, "const", bit);
    b.output("out", rails);
    finish_cell(
        b,
        "constant_source",
        &[("bit", (bit as u8).into())],
        protocol,
    )
}
