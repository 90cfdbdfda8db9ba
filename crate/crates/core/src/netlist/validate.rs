use std::collections::BTreeSet;
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use super::{Driver, GateId, NetId, Netlist};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DiagnosticKind {
    UnconnectedInput,
    MultipleDrivers,
    ArityMismatch,
    CombinationalLoop,
    DanglingOutput,
    BadNetReference,
    BadPort,
    InconsistentReset,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.message)
    }
}

fn diag(kind: DiagnosticKind, message: String) -> Diagnostic {
    Diagnostic { kind, message }
}

/// Structural checks. An empty result means the simulator accepts the
/// netlist.
pub fn validate(netlist: &Netlist) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let count = netlist.net_count();
    let in_range = |n: NetId| n.index() < count;

    // Every net reference must exist before anything else is meaningful.
    let mut references: Vec<(NetId, String)> = Vec::new();
    for g in netlist.gates() {
        references.push((g.output, format!("output of {}", g.id)));
        for (slot, &n) in g.inputs.iter().enumerate() {
            references.push((n, format!("input {slot} of {}", g.id)));
        }
    }
    for p in netlist.ports() {
        references.push((p.rail1, format!("rail1 of port {}", p.name)));
        references.push((p.rail0, format!("rail0 of port {}", p.name)));
    }
    for (n, what) in [
        (netlist.ack_out(), "ack_out"),
        (netlist.ack_in(), "ack_in"),
        (netlist.phase(), "phase"),
    ] {
        if let Some(n) = n {
            references.push((n, what.to_string()));
        }
    }
    for c in netlist.constants() {
        references.push((c.net, "constant".to_string()));
    }
    for (n, what) in &references {
        if !in_range(*n) {
            out.push(diag(
                DiagnosticKind::BadNetReference,
                format!("{what} refers to {n}, but the netlist has {count} nets"),
            ));
        }
    }
    if !out.is_empty() {
        return out;
    }

    for (i, g) in netlist.gates().iter().enumerate() {
        if g.id.index() != i {
            out.push(diag(
                DiagnosticKind::BadNetReference,
                format!("gate at position {i} carries id {}", g.id),
            ));
        }
        if g.inputs.len() != g.kind.arity() {
            out.push(diag(
                DiagnosticKind::ArityMismatch,
                format!(
                    "{} is {} with {} inputs, expected {}",
                    g.id,
                    g.kind,
                    g.inputs.len(),
                    g.kind.arity()
                ),
            ));
        }
    }

    // Driver census.
    let mut drivers = vec![0usize; count];
    for g in netlist.gates() {
        drivers[g.output.index()] += 1;
    }
    for n in netlist.primary_inputs() {
        drivers[n.index()] += 1;
    }
    for c in netlist.constants() {
        drivers[c.net.index()] += 1;
    }
    for (i, &d) in drivers.iter().enumerate() {
        if d > 1 {
            out.push(diag(
                DiagnosticKind::MultipleDrivers,
                format!("{} has {d} drivers", NetId(i as u32)),
            ));
        }
    }
    for g in netlist.gates() {
        for (slot, &n) in g.inputs.iter().enumerate() {
            if drivers[n.index()] == 0 {
                out.push(diag(
                    DiagnosticKind::UnconnectedInput,
                    format!("input {slot} of {} ({n}) has no driver", g.id),
                ));
            }
        }
    }
    for p in netlist.output_ports() {
        for n in [p.rail1, p.rail0] {
            if drivers[n.index()] == 0 {
                out.push(diag(
                    DiagnosticKind::DanglingOutput,
                    format!("output port {} rail {n} has no driver", p.name),
                ));
            }
        }
    }
    if let Some(a) = netlist.ack_out() {
        if drivers[a.index()] == 0 {
            out.push(diag(
                DiagnosticKind::DanglingOutput,
                format!("ack_out {a} has no driver"),
            ));
        }
    }

    let mut names = BTreeSet::new();
    for p in netlist.ports() {
        if p.rail1 == p.rail0 {
            out.push(diag(
                DiagnosticKind::BadPort,
                format!("port {} uses {} for both rails", p.name, p.rail1),
            ));
        }
        if !names.insert(p.name.as_str()) {
            out.push(diag(
                DiagnosticKind::BadPort,
                format!("port name {} is used twice", p.name),
            ));
        }
    }

    out.extend(combinational_loops(netlist));
    if out.is_empty() {
        out.extend(reset_consistency(netlist));
    }
    out
}

fn combinational_loops(netlist: &Netlist) -> Vec<Diagnostic> {
    let mut graph = DiGraph::<GateId, ()>::with_capacity(netlist.gates().len(), 0);
    let nodes: Vec<_> = netlist.gates().iter().map(|g| graph.add_node(g.id)).collect();
    for g in netlist.gates().iter().filter(|g| !g.kind.is_stateful()) {
        for &(reader, _) in &netlist.net(g.output).fanout {
            if !netlist.gate(reader).kind.is_stateful() {
                graph.add_edge(nodes[g.id.index()], nodes[reader.index()], ());
            }
        }
    }
    tarjan_scc(&graph)
        .into_iter()
        .filter(|scc| scc.len() > 1 || graph.contains_edge(scc[0], scc[0]))
        .map(|scc| {
            let mut ids: Vec<GateId> = scc.iter().map(|&n| graph[n]).collect();
            ids.sort();
            let list: Vec<String> = ids.iter().map(|g| g.to_string()).collect();
            diag(
                DiagnosticKind::CombinationalLoop,
                format!("loop without a C-element through {}", list.join(", ")),
            )
        })
        .collect()
}

/// Reset levels must be a steady state: combinational gates agree with
/// their inputs, and a C-element whose inputs agree holds that value.
fn reset_consistency(netlist: &Netlist) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for g in netlist.gates() {
        let inputs: Vec<bool> = g.inputs.iter().map(|&n| netlist.reset_level(n)).collect();
        let settled = g.kind.eval(inputs.iter().copied(), g.reset);
        if settled != g.reset {
            out.push(diag(
                DiagnosticKind::InconsistentReset,
                format!(
                    "{} ({}) resets to {} but its inputs {:?} imply {}",
                    g.id, g.kind, g.reset as u8, inputs, settled as u8
                ),
            ));
        }
    }
    if let Some(a) = netlist.ack_out() {
        if matches!(netlist.net(a).driver, Some(Driver::Primary)) {
            out.push(diag(
                DiagnosticKind::BadPort,
                format!("ack_out {a} is driven by the environment"),
            ));
        }
    }
    out
}
