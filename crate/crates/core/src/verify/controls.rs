//! Deliberately broken circuits. Each one must make its checker fail.

use thiserror::Error;

use crate::cells::{make_majority_adder, CellHandle};
use crate::netlist::{
    dualize, Driver, Gate, GateId, GateKind, Meta, NetId, Netlist, NetlistBuilder,
    Protocol, Rails,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ControlError {
    #[error("no cell instance named {0}")]
    NoInstance(String),
    #[error("cell instance {0} lacks port {1}")]
    NoPort(String, &'static str),
    #[error("{0} is not driven by a gate")]
    NotGateDriven(NetId),
    #[error("no minterm C-element reads both {0} and {1}")]
    NoMinterm(NetId, NetId),
}

fn gate_driving(netlist: &Netlist, net: NetId) -> Result<GateId, ControlError> {
    match netlist.net(net).driver {
        Some(Driver::Gate(g)) => Ok(g),
        _ => Err(ControlError::NotGateDriven(net)),
    }
}

/// Swaps the nets driven by a full adder's sum and carry gates, so the
/// adder's sum appears on its carry port and vice versa.
pub fn swap_sum_cout(netlist: &Netlist, instance: &str) -> Result<Netlist, ControlError> {
    let cell = netlist
        .instances()
        .iter()
        .find(|c| c.name == instance)
        .ok_or_else(|| ControlError::NoInstance(instance.to_string()))?;
    let sum = cell
        .port("sum")
        .ok_or_else(|| ControlError::NoPort(instance.to_string(), "sum"))?
        .rails();
    let cout = cell
        .port("cout")
        .ok_or_else(|| ControlError::NoPort(instance.to_string(), "cout"))?
        .rails();
    let mut parts = netlist.clone().into_parts();
    for (s, c) in [(sum.rail1, cout.rail1), (sum.rail0, cout.rail0)] {
        let gs = gate_driving(netlist, s)?;
        let gc = gate_driving(netlist, c)?;
        parts.gates[gs.index()].output = c;
        parts.gates[gc.index()].output = s;
    }
    let tag: String = instance
        .chars()
        .filter_map(|c| match c {
            '[' => None,
            ']' => Some('_'),
            c => Some(c),
        })
        .collect();
    parts.meta.name = format!("{}_swap_{}", netlist.name(), tag.trim_end_matches('_'));
    Ok(Netlist::from_parts(parts))
}

/// Full adder whose carry is the majority form: three C2s into one OR3
/// per rail. With all inputs equal, more than one C2 fires into the OR3.
pub fn majority_adder(protocol: Protocol) -> CellHandle {
    make_majority_adder(protocol)
}

/// Two-input cell whose output claims data as soon as the phase line
/// moves, without looking at its inputs.
pub fn early_completion_stub(protocol: Protocol) -> CellHandle {
    let mut b = NetlistBuilder::new("early_stub");
    b.input("A");
    b.input("B");
    let phase = b.phase();
    let rail1 = b.gate(GateKind::Buf, &[phase]);
    let rail0 = b.constant(false);
    b.output("Z", Rails { rail1, rail0 });
    let rtz = b.finish(Meta {
        cell: Some("early_stub".to_string()),
        ..Meta::default()
    });
    CellHandle {
        netlist: match protocol {
            Protocol::Rtz => rtz,
            Protocol::Rto => dualize(&rtz),
        },
    }
}

/// Breaks the isochronic fork of the registered `a[0]` true rail: the
/// branch feeding the `1`-minterm of partial product `pp[0][0]` passes
/// through a chain of `buffers` BUF gates. A slow branch can leave a
/// stale level on the minterm input into the next cycle.
pub fn delayed_fork(netlist: &Netlist, buffers: usize) -> Result<Netlist, ControlError> {
    let cell = netlist
        .instances()
        .iter()
        .find(|c| c.name == "pp[0][0]")
        .ok_or_else(|| ControlError::NoInstance("pp[0][0]".to_string()))?;
    let a = cell
        .port("A")
        .ok_or_else(|| ControlError::NoPort(cell.name.clone(), "A"))?
        .rails();
    let b = cell
        .port("B")
        .ok_or_else(|| ControlError::NoPort(cell.name.clone(), "B"))?
        .rails();
    let minterm = cell
        .gate_ids()
        .map(|g| netlist.gate(g))
        .find(|g| g.kind == GateKind::C2 && g.inputs == [a.rail1, b.rail1])
        .ok_or(ControlError::NoMinterm(a.rail1, b.rail1))?
        .id;

    let reset = netlist.reset_level(a.rail1);
    let mut parts = netlist.clone().into_parts();
    let mut source = a.rail1;
    for _ in 0..buffers {
        let out = NetId(parts.net_count as u32);
        parts.net_count += 1;
        parts.gates.push(Gate {
            id: GateId(parts.gates.len() as u32),
            kind: GateKind::Buf,
            inputs: vec![source],
            output: out,
            reset,
        });
        source = out;
    }
    parts.gates[minterm.index()].inputs[0] = source;
    parts.meta.name = format!("{}_delayed_fork{buffers}", netlist.name());
    Ok(Netlist::from_parts(parts))
}
