//! Cross-checks against oracles written independently of the library.

use std::collections::HashMap;

use qdi_core::harness::{measure_latencies, Harness};
use qdi_core::netlist::{encode, DualRailValue, GateId, NetId};
use qdi_core::{
    critical_path, generate, structure_stats, DelayModel, FullAdderKind, MultiplierSpec, Netlist,
    Protocol,
};

/// Level-sensitive fixpoint evaluation with no notion of time: apply the
/// operands as data with the acknowledge input idle and iterate every
/// gate until nothing changes.
fn settle_levels(n: &Netlist, a: u64, b: u64) -> Vec<bool> {
    let p = n.protocol();
    let mut levels: Vec<bool> = (0..n.net_count()).map(|i| n.reset_level(NetId(i as u32))).collect();
    for port in n.input_ports() {
        let (stem, idx) = port.name.split_once('[').unwrap();
        let bit: u32 = idx.trim_end_matches(']').parse().unwrap();
        let value = if stem == "a" { a } else { b };
        let (r1, r0) = encode((value >> bit) & 1 == 1, p);
        levels[port.rail1.index()] = r1;
        levels[port.rail0.index()] = r0;
    }
    if let Some(ph) = n.phase() {
        levels[ph.index()] = p.data_phase_level();
    }
    loop {
        let mut changed = false;
        for g in n.gates() {
            let ins: Vec<bool> = g.inputs.iter().map(|x| levels[x.index()]).collect();
            let cur = levels[g.output.index()];
            let next = if g.kind.is_stateful() {
                if ins.iter().all(|&v| v == ins[0]) { ins[0] } else { cur }
            } else if g.kind.is_and() {
                ins.iter().all(|&v| v)
            } else if g.kind.is_or() {
                ins.iter().any(|&v| v)
            } else if g.kind.name() == "NOT" {
                !ins[0]
            } else {
                ins[0]
            };
            if next != cur {
                levels[g.output.index()] = next;
                changed = true;
            }
        }
        if !changed {
            return levels;
        }
    }
}

fn settle_product(n: &Netlist, a: u64, b: u64) -> u64 {
    let levels = settle_levels(n, a, b);
    let p = n.protocol();
    let mut product = 0;
    for port in n.output_ports() {
        let bit: u32 = port.name[2..port.name.len() - 1].parse().unwrap();
        let r1 = levels[port.rail1.index()];
        let r0 = levels[port.rail0.index()];
        assert_ne!(r1, r0, "port {} not at data after settling", port.name);
        if (r1, r0) == encode(true, p) {
            product |= 1 << bit;
        }
    }
    product
}

#[test]
fn fixpoint_evaluation_agrees_with_integer_product() {
    for kind in [FullAdderKind::Dims, FullAdderKind::Weak] {
        for p in [Protocol::Rtz, Protocol::Rto] {
            for n in [2usize, 3, 4] {
                let net = generate(&MultiplierSpec::new(n, kind, p)).unwrap();
                for a in 0..1u64 << n {
                    for b in 0..1u64 << n {
                        assert_eq!(settle_product(&net, a, b), a * b, "{} {a}x{b}", net.name());
                    }
                }
            }
        }
    }
}

#[test]
fn event_simulation_agrees_with_fixpoint_evaluation() {
    let net = generate(&MultiplierSpec::new(5, FullAdderKind::Weak, Protocol::Rto)).unwrap();
    let mut h = Harness::new(&net, &DelayModel::random(99)).unwrap();
    for (a, b) in [(31, 31), (17, 6), (0, 9), (22, 13)] {
        assert_eq!(h.run_cycle(&[a, b]).unwrap().result, settle_product(&net, a, b));
    }
}

#[test]
fn documented_examples() {
    let net = generate(&MultiplierSpec::new(4, FullAdderKind::Dims, Protocol::Rtz)).unwrap();
    let mut h = Harness::new(&net, &DelayModel::Unit).unwrap();
    assert_eq!(h.run_cycle(&[13, 11]).unwrap().result, 143);
    for b in 0..16 {
        assert_eq!(h.run_cycle(&[0, b]).unwrap().result, 0);
    }
    assert!(h.finish().unwrap());
}

#[test]
fn reset_decodes_to_spacer() {
    for p in [Protocol::Rtz, Protocol::Rto] {
        let net = generate(&MultiplierSpec::new(4, FullAdderKind::Weak, p)).unwrap();
        let h = Harness::new(&net, &DelayModel::Unit).unwrap();
        for port in net.ports() {
            assert_eq!(h.sim().read_port(port), DualRailValue::Spacer);
        }
    }
}

/// Longest gate path to the completion root by memoised depth-first
/// search over gate fanout.
fn longest_to(net: &Netlist, root: GateId) -> HashMap<GateId, usize> {
    fn visit(net: &Netlist, g: GateId, root: GateId, memo: &mut HashMap<GateId, Option<usize>>) -> Option<usize> {
        if let Some(&v) = memo.get(&g) {
            return v;
        }
        let out = if g == root {
            Some(1)
        } else {
            net.net(net.gate(g).output)
                .fanout
                .iter()
                .filter_map(|&(r, _)| visit(net, r, root, memo))
                .max()
                .map(|d| d + 1)
        };
        memo.insert(g, out);
        out
    }
    let mut memo = HashMap::new();
    for g in net.gates() {
        visit(net, g.id, root, &mut memo);
    }
    memo.into_iter().filter_map(|(g, d)| d.map(|d| (g, d))).collect()
}

#[test]
fn critical_path_matches_search_and_bounds_unit_latency() {
    for (n, kind) in [
        (2usize, FullAdderKind::Dims),
        (3, FullAdderKind::Dims),
        (4, FullAdderKind::Dims),
        (4, FullAdderKind::Weak),
    ] {
        let net = generate(&MultiplierSpec::new(n, kind, Protocol::Rtz)).unwrap();
        let cp = critical_path(&net).unwrap();
        let root = *cp.gates.last().unwrap();
        let depths = longest_to(&net, root);
        let regs = net.instances().iter().find(|c| c.name == "input_regs").unwrap();
        let expected = regs.gate_ids().filter_map(|g| depths.get(&g)).max().copied().unwrap();
        assert_eq!(cp.forward_length, expected);
        assert_eq!(cp.reverse_length, expected);
        assert_eq!(cp.gates.len(), expected);

        // Under unit delays no gate can fire later than its structural depth,
        // and some operand pair exercises the longest path.
        let mut h = Harness::new(&net, &DelayModel::Unit).unwrap();
        let pairs = (0..1u64 << n).flat_map(|a| (0..1u64 << n).map(move |b| [a, b]));
        let reports = h.run_sequence(pairs).unwrap();
        let worst = reports.iter().map(|r| r.forward as usize).max().unwrap();
        assert!(worst <= expected, "{} {worst} > {expected}", net.name());
        if kind == FullAdderKind::Dims {
            assert_eq!(worst, expected, "{}", net.name());
        }
    }
}

#[test]
fn structure_formulas() {
    for n in [2usize, 3, 4, 5, 8] {
        for kind in [FullAdderKind::Dims, FullAdderKind::Weak] {
            let s = structure_stats(&generate(&MultiplierSpec::new(n, kind, Protocol::Rto)).unwrap()).unwrap();
            assert_eq!(
                (s.and_cells, s.full_adders, s.constant_carries, s.product_width),
                (n * n, n * (n - 1), n, 2 * n)
            );
        }
    }
}

#[test]
fn larger_multipliers_are_slower() {
    let mean = |n: usize| {
        let net = generate(&MultiplierSpec::new(n, FullAdderKind::Weak, Protocol::Rtz)).unwrap();
        let mut h = Harness::new(&net, &DelayModel::Unit).unwrap();
        let mask = (1u64 << n) - 1;
        let reports = h
            .run_sequence((0..64u64).map(|i| [(i * 7) & mask, (i * 13 + 1) & mask]))
            .unwrap();
        measure_latencies(&reports).unwrap().cycle_time.mean
    };
    assert!(mean(8) > mean(4));
}
