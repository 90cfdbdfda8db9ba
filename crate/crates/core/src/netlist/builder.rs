use super::{
    CellInstance, CellKind, ConstantNet, DualRailPort, Gate, GateId, GateKind, Meta, NetId,
    Netlist, NetlistParts, PortDir, Protocol, Rails,
};

/// Incremental constructor for RTZ netlists.
///
/// Everything is emitted in RTZ polarity; RTO circuits are obtained by
/// dualizing the finished netlist. Reset levels are computed in
/// [`NetlistBuilder::finish`] from the RTZ idle state (rails low, `ack_in`
/// high, phase line low).
#[derive(Debug, Clone, Default)]
pub struct NetlistBuilder {
    name: String,
    gates: Vec<Gate>,
    net_count: u32,
    ports: Vec<DualRailPort>,
    ack_out: Option<NetId>,
    ack_in: Option<NetId>,
    phase: Option<NetId>,
    constants: Vec<ConstantNet>,
    instances: Vec<CellInstance>,
    c3_as_tree: bool,
    or4_as_tree: bool,
}

impl NetlistBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        NetlistBuilder {
            name: name.into(),
            ..Default::default()
        }
    }

    /// Emit 3-input C-elements as `C2(C2(x, y), z)`.
    pub fn c3_as_tree(mut self, yes: bool) -> Self {
        self.c3_as_tree = yes;
        self
    }

    /// Emit 4-input ORs as a two-level OR2 tree.
    pub fn or4_as_tree(mut self, yes: bool) -> Self {
        self.or4_as_tree = yes;
        self
    }

    pub fn net(&mut self) -> NetId {
        let id = NetId(self.net_count);
        self.net_count += 1;
        id
    }

    pub fn gate_count(&self) -> u32 {
        self.gates.len() as u32
    }

    /// Add a gate driving a fresh net; returns that net.
    pub fn gate(&mut self, kind: GateKind, inputs: &[NetId]) -> NetId {
        let output = self.net();
        self.gate_driving(kind, inputs, output);
        output
    }

    /// Add a gate driving an existing net.
    pub fn gate_driving(&mut self, kind: GateKind, inputs: &[NetId], output: NetId) -> GateId {
        let id = GateId(self.gates.len() as u32);
        self.gates.push(Gate {
            id,
            kind,
            inputs: inputs.to_vec(),
            output,
            reset: false,
        });
        id
    }

    pub fn c2(&mut self, a: NetId, b: NetId) -> NetId {
        self.gate(GateKind::C2, &[a, b])
    }

    pub fn c3(&mut self, a: NetId, b: NetId, c: NetId) -> NetId {
        if self.c3_as_tree {
            let ab = self.c2(a, b);
            self.c2(ab, c)
        } else {
            self.gate(GateKind::C3, &[a, b, c])
        }
    }

    /// OR of two to four nets.
    pub fn or(&mut self, inputs: &[NetId]) -> NetId {
        match inputs.len() {
            4 if self.or4_as_tree => {
                let lo = self.gate(GateKind::Or2, &inputs[..2]);
                let hi = self.gate(GateKind::Or2, &inputs[2..]);
                self.gate(GateKind::Or2, &[lo, hi])
            }
            n => {
                let kind = GateKind::or_of_arity(n)
                    .unwrap_or_else(|| panic!("no OR primitive of arity {n}"));
                self.gate(kind, inputs)
            }
        }
    }

    /// Balanced C2 tree over `leaves`; returns the root net.
    pub fn c_tree(&mut self, leaves: &[NetId]) -> NetId {
        assert!(!leaves.is_empty(), "C-element tree needs at least one leaf");
        let mut level = leaves.to_vec();
        while level.len() > 1 {
            let mut next = Vec::with_capacity(level.len().div_ceil(2));
            for pair in level.chunks(2) {
                match pair {
                    [a, b] => next.push(self.c2(*a, *b)),
                    [a] => next.push(*a),
                    _ => unreachable!(),
                }
            }
            level = next;
        }
        level[0]
    }

    pub fn input(&mut self, name: impl Into<String>) -> Rails {
        let rail1 = self.net();
        let rail0 = self.net();
        self.ports.push(DualRailPort {
            name: name.into(),
            direction: PortDir::In,
            rail1,
            rail0,
        });
        Rails { rail1, rail0 }
    }

    pub fn output(&mut self, name: impl Into<String>, rails: Rails) {
        self.ports.push(DualRailPort {
            name: name.into(),
            direction: PortDir::Out,
            rail1: rails.rail1,
            rail0: rails.rail0,
        });
    }

    pub fn ack_in(&mut self) -> NetId {
        match self.ack_in {
            Some(n) => n,
            None => {
                let n = self.net();
                self.ack_in = Some(n);
                n
            }
        }
    }

    pub fn set_ack_out(&mut self, net: NetId) {
        self.ack_out = Some(net);
    }

    pub fn phase(&mut self) -> NetId {
        match self.phase {
            Some(n) => n,
            None => {
                let n = self.net();
                self.phase = Some(n);
                n
            }
        }
    }

    /// Net tied to `level`; one net per level is shared.
    pub fn constant(&mut self, level: bool) -> NetId {
        if let Some(c) = self.constants.iter().find(|c| c.level == level) {
            return c.net;
        }
        let net = self.net();
        self.constants.push(ConstantNet { net, level });
        net
    }

    /// Record gates `[first_gate, now)` as one cell instance.
    pub fn tag(
        &mut self,
        kind: CellKind,
        name: impl Into<String>,
        first_gate: u32,
        ports: Vec<DualRailPort>,
    ) {
        self.instances.push(CellInstance {
            kind,
            name: name.into(),
            gates: (first_gate, self.gate_count()),
            ports,
        });
    }

    /// Finish as an RTZ netlist with computed reset levels.
    pub fn finish(self, meta: Meta) -> Netlist {
        let NetlistBuilder {
            name,
            mut gates,
            net_count,
            ports,
            ack_out,
            ack_in,
            phase,
            constants,
            instances,
            ..
        } = self;

        // Settle the RTZ idle state: rails and phase low, ack_in high.
        let mut levels = vec![false; net_count as usize];
        if let Some(a) = ack_in {
            levels[a.index()] = true;
        }
        for c in &constants {
            levels[c.net.index()] = c.level;
        }
        for _ in 0..=gates.len() {
            let mut changed = false;
            for g in &gates {
                let current = levels[g.output.index()];
                let next = g.kind.eval(g.inputs.iter().map(|n| levels[n.index()]), current);
                if next != current {
                    levels[g.output.index()] = next;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for g in &mut gates {
            g.reset = levels[g.output.index()];
        }

        let meta = Meta {
            name: if meta.name.is_empty() { name } else { meta.name },
            instances,
            ..meta
        };
        Netlist::from_parts(NetlistParts {
            protocol: Protocol::Rtz,
            gates,
            net_count: net_count as usize,
            ports,
            ack_out,
            ack_in,
            phase,
            constants,
            meta,
        })
    }
}
