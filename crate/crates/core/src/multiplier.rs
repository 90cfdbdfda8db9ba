//! N×N unsigned array multipliers built from indicating cells.
//!
//! Layout (Braun array): an input register bank, N² strongly indicating
//! AND cells for the partial products, N−1 carry-save rows of N−1 full
//! adders and a final ripple-carry row of N−1 full adders, and a
//! completion detector over the 2N product bits. The N carry inputs that
//! have no partial product to consume (first carry-save row plus the head
//! of the ripple row) come from phase-following constant-0 sources.

use petgraph::algo::toposort;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cells::{
    and2_strong_into, completion_detector_into, constant_source_into, full_adder_into,
    register_bank_into, FullAdderKind,
};
use crate::netlist::{dualize, CellKind, GateId, Meta, Netlist, NetlistBuilder, Protocol, Rails};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MultiplierError {
    #[error("operand width must be between 2 and 32, got {0}")]
    BadWidth(usize),
    #[error("NOT_A_GENERATED_MULTIPLIER: netlist carries no generator metadata")]
    NotAGeneratedMultiplier,
    #[error("netlist has no completion detector output")]
    NoCompletion,
    #[error("netlist has a cycle; critical path is undefined")]
    Cyclic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiplierSpec {
    pub n: usize,
    pub fa_kind: FullAdderKind,
    pub protocol: Protocol,
    #[serde(default)]
    pub c3_as_tree: bool,
    #[serde(default)]
    pub or4_as_tree: bool,
}

impl MultiplierSpec {
    pub fn new(n: usize, fa_kind: FullAdderKind, protocol: Protocol) -> Self {
        MultiplierSpec {
            n,
            fa_kind,
            protocol,
            c3_as_tree: false,
            or4_as_tree: false,
        }
    }

    pub fn validate(&self) -> Result<(), MultiplierError> {
        if (2..=32).contains(&self.n) {
            Ok(())
        } else {
            Err(MultiplierError::BadWidth(self.n))
        }
    }

    /// Design name such as `mul4x4_weak_rtz`.
    pub fn name(&self) -> String {
        let mut name = format!(
            "mul{n}x{n}_{}_{}",
            self.fa_kind,
            self.protocol,
            n = self.n
        );
        if self.c3_as_tree {
            name.push_str("_c3tree");
        }
        if self.or4_as_tree {
            name.push_str("_or4tree");
        }
        name
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureStats {
    pub and_cells: usize,
    pub full_adders: usize,
    pub constant_carries: usize,
    pub c_element_count: usize,
    pub gate_count: usize,
    pub product_width: usize,
}

pub fn generate(spec: &MultiplierSpec) -> Result<Netlist, MultiplierError> {
    spec.validate()?;
    let n = spec.n;
    let mut b = NetlistBuilder::new(spec.name())
        .c3_as_tree(spec.c3_as_tree)
        .or4_as_tree(spec.or4_as_tree);

    let mut inputs: Vec<Rails> = (0..n).map(|j| b.input(format!("a[{j}]"))).collect();
    inputs.extend((0..n).map(|i| b.input(format!("b[{i}]"))));
    let ack_in = b.ack_in();
    let registered = register_bank_into(&mut b, "input_regs", &inputs, ack_in);
    let (a, bv) = registered.split_at(n);

    // pp[i][j] = a[j] & b[i], weight i + j.
    let mut pp = vec![Vec::with_capacity(n); n];
    for (i, row) in pp.iter_mut().enumerate() {
        for j in 0..n {
            row.push(and2_strong_into(&mut b, &format!("pp[{i}][{j}]"), a[j], bv[i]));
        }
    }

    let mut product = vec![pp[0][0]];
    let mut cin = 0usize;
    let mut zero = |b: &mut NetlistBuilder| {
        let rails = constant_source_into(b, &format!("cin[{cin}]"), false);
        cin += 1;
        rails
    };

    // Carry-save rows. sums[j] has weight i + j, carries[j] weight i + j + 1.
    let mut sums: Vec<Rails> = Vec::new();
    let mut carries: Vec<Rails> = Vec::new();
    for i in 1..n {
        let mut next_sums = Vec::with_capacity(n - 1);
        let mut next_carries = Vec::with_capacity(n - 1);
        for j in 0..n - 1 {
            let x = if i == 1 {
                pp[0][j + 1]
            } else if j < n - 2 {
                sums[j + 1]
            } else {
                pp[i - 1][n - 1]
            };
            let c = if i == 1 { zero(&mut b) } else { carries[j] };
            let (s, co) = full_adder_into(&mut b, spec.fa_kind, &format!("fa[{i}][{j}]"), x, pp[i][j], c);
            next_sums.push(s);
            next_carries.push(co);
        }
        product.push(next_sums[0]);
        sums = next_sums;
        carries = next_carries;
    }

    // Ripple-carry merge of the last sum and carry vectors.
    let mut ripple = zero(&mut b);
    for j in 0..n - 1 {
        let x = if j < n - 2 { sums[j + 1] } else { pp[n - 1][n - 1] };
        let (s, co) = full_adder_into(&mut b, spec.fa_kind, &format!("fa[{n}][{j}]"), x, carries[j], ripple);
        product.push(s);
        ripple = co;
    }
    product.push(ripple);
    debug_assert_eq!(product.len(), 2 * n);

    for (k, &p) in product.iter().enumerate() {
        b.output(format!("p[{k}]"), p);
    }
    let root = completion_detector_into(&mut b, "output_cd", &product);
    b.set_ack_out(root);

    let rtz_spec = MultiplierSpec {
        protocol: Protocol::Rtz,
        ..*spec
    };
    let rtz = b.finish(Meta {
        generator: Some(rtz_spec),
        ..Meta::default()
    });
    let netlist = match spec.protocol {
        Protocol::Rtz => rtz,
        Protocol::Rto => dualize(&rtz),
    };
    let meta = Meta {
        name: spec.name(),
        ..netlist.meta().clone()
    };
    Ok(netlist.with_meta(meta))
}

pub fn structure_stats(netlist: &Netlist) -> Result<StructureStats, MultiplierError> {
    if netlist.meta().generator.is_none() {
        return Err(MultiplierError::NotAGeneratedMultiplier);
    }
    let count = |pred: &dyn Fn(CellKind) -> bool| {
        netlist.instances().iter().filter(|c| pred(c.kind)).count()
    };
    Ok(StructureStats {
        and_cells: count(&|k| k == CellKind::And2Strong),
        full_adders: count(&|k| k.is_full_adder()),
        constant_carries: count(&|k| k == CellKind::ConstantSource),
        c_element_count: netlist.c_element_count(),
        gate_count: netlist.gates().len(),
        product_width: netlist.output_ports().len(),
    })
}

/// Longest register-to-completion path under unit gate weights.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriticalPath {
    /// Gates from the input register to the completion detector root.
    pub gates: Vec<GateId>,
    /// Gate count along the data (forward) traversal.
    pub forward_length: usize,
    /// Same measure computed by walking back from the completion root.
    pub reverse_length: usize,
}

pub fn critical_path(netlist: &Netlist) -> Result<CriticalPath, MultiplierError> {
    let ack = netlist.ack_out().ok_or(MultiplierError::NoCompletion)?;
    let root = netlist
        .gates()
        .iter()
        .find(|g| g.output == ack)
        .map(|g| g.id)
        .ok_or(MultiplierError::NoCompletion)?;
    let gate_count = netlist.gates().len();

    let mut graph = DiGraph::<(), ()>::with_capacity(gate_count, 0);
    let nodes: Vec<NodeIndex> = (0..gate_count).map(|_| graph.add_node(())).collect();
    let mut preds: Vec<Vec<GateId>> = vec![Vec::new(); gate_count];
    let mut succs: Vec<Vec<GateId>> = vec![Vec::new(); gate_count];
    for g in netlist.gates() {
        for &(reader, _) in &netlist.net(g.output).fanout {
            graph.add_edge(nodes[g.id.index()], nodes[reader.index()], ());
            preds[reader.index()].push(g.id);
            succs[g.id.index()].push(reader);
        }
    }
    for list in preds.iter_mut().chain(succs.iter_mut()) {
        list.sort();
        list.dedup();
    }
    let order: Vec<usize> = toposort(&graph, None)
        .map_err(|_| MultiplierError::Cyclic)?
        .into_iter()
        .map(|n| n.index())
        .collect();

    let mut is_start = vec![false; gate_count];
    for inst in netlist
        .instances()
        .iter()
        .filter(|c| c.kind == CellKind::RegisterBank)
    {
        for g in inst.gate_ids() {
            is_start[g.index()] = true;
        }
    }
    if !is_start.iter().any(|&s| s) {
        // No tagged registers: start from gates fed only by the environment.
        for g in netlist.gates() {
            is_start[g.id.index()] = preds[g.id.index()].is_empty();
        }
    }

    // Forward: longest path ending at each gate.
    let mut dist: Vec<Option<usize>> = vec![None; gate_count];
    let mut back: Vec<Option<GateId>> = vec![None; gate_count];
    for &g in &order {
        if is_start[g] {
            dist[g] = Some(1);
            continue;
        }
        let mut best: Option<(usize, GateId)> = None;
        for &p in &preds[g] {
            if let Some(d) = dist[p.index()] {
                if best.is_none_or(|(bd, _)| d > bd) {
                    best = Some((d, p));
                }
            }
        }
        if let Some((d, p)) = best {
            dist[g] = Some(d + 1);
            back[g] = Some(p);
        }
    }
    let forward_length = dist[root.index()].ok_or(MultiplierError::NoCompletion)?;
    let mut gates = vec![root];
    while let Some(p) = back[gates.last().unwrap().index()] {
        gates.push(p);
    }
    gates.reverse();

    // Reverse: longest path from each gate to the root.
    let mut to_root: Vec<Option<usize>> = vec![None; gate_count];
    to_root[root.index()] = Some(1);
    for &g in order.iter().rev() {
        if g == root.index() {
            continue;
        }
        let best = succs[g].iter().filter_map(|s| to_root[s.index()]).max();
        to_root[g] = best.map(|d| d + 1);
    }
    let reverse_length = (0..gate_count)
        .filter(|&g| is_start[g])
        .filter_map(|g| to_root[g])
        .max()
        .ok_or(MultiplierError::NoCompletion)?;

    Ok(CriticalPath {
        gates,
        forward_length,
        reverse_length,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::validate;

    fn spec(n: usize, kind: FullAdderKind, p: Protocol) -> MultiplierSpec {
        MultiplierSpec::new(n, kind, p)
    }

    #[test]
    fn counts_follow_width() {
        for n in [2, 3, 4, 8] {
            let stats = structure_stats(&generate(&spec(n, FullAdderKind::Weak, Protocol::Rtz)).unwrap()).unwrap();
            assert_eq!(stats.and_cells, n * n);
            assert_eq!(stats.full_adders, n * (n - 1));
            assert_eq!(stats.constant_carries, n);
            assert_eq!(stats.product_width, 2 * n);
        }
    }

    #[test]
    fn generated_netlists_validate() {
        for kind in [FullAdderKind::Dims, FullAdderKind::Weak] {
            for p in [Protocol::Rtz, Protocol::Rto] {
                for (c3, or4) in [(false, false), (true, true)] {
                    let s = MultiplierSpec {
                        c3_as_tree: c3,
                        or4_as_tree: or4,
                        ..spec(4, kind, p)
                    };
                    let n = generate(&s).unwrap();
                    assert!(validate(&n).is_empty(), "{}: {:?}", s.name(), validate(&n));
                    assert_eq!(n.protocol(), p);
                    assert_eq!(n.meta().generator, Some(s));
                }
            }
        }
    }

    #[test]
    fn width_bounds() {
        assert_eq!(
            generate(&spec(1, FullAdderKind::Dims, Protocol::Rtz)),
            Err(MultiplierError::BadWidth(1))
        );
        assert!(generate(&spec(33, FullAdderKind::Dims, Protocol::Rtz)).is_err());
    }

    #[test]
    fn stats_need_generator_metadata() {
        let cell = crate::cells::make_and2_strong(Protocol::Rtz);
        assert_eq!(
            structure_stats(&cell.netlist),
            Err(MultiplierError::NotAGeneratedMultiplier)
        );
    }

    #[test]
    fn critical_path_shape() {
        let n4 = generate(&spec(4, FullAdderKind::Dims, Protocol::Rtz)).unwrap();
        let n8 = generate(&spec(8, FullAdderKind::Dims, Protocol::Rtz)).unwrap();
        let p4 = critical_path(&n4).unwrap();
        let p8 = critical_path(&n8).unwrap();
        assert_eq!(p4.forward_length, p4.reverse_length);
        assert_eq!(p8.forward_length, p8.reverse_length);
        assert!(p8.forward_length > p4.forward_length);
        assert_eq!(p4.gates.len(), p4.forward_length);

        let regs = n4
            .instances()
            .iter()
            .find(|c| c.kind == CellKind::RegisterBank)
            .unwrap();
        let first = p4.gates[0];
        assert!(regs.gate_ids().any(|g| g == first));
        let last = n4.gate(*p4.gates.last().unwrap());
        assert_eq!(Some(last.output), n4.ack_out());
        assert_eq!(critical_path(&n4).unwrap(), p4);
    }
}
