use super::{ConstantNet, Gate, Netlist, NetlistParts};

/// Flip a netlist between RTZ and RTO.
///
/// AND and OR gates of equal arity swap, C-elements and inverters keep
/// their kind, every reset level and constant is complemented, and the
/// port structure is untouched. Applied twice it returns the original.
pub fn dualize(netlist: &Netlist) -> Netlist {
    let parts = netlist.clone().into_parts();
    let gates = parts
        .gates
        .into_iter()
        .map(|g| Gate {
            kind: g.kind.dual(),
            reset: !g.reset,
            ..g
        })
        .collect();
    let constants = parts
        .constants
        .into_iter()
        .map(|c| ConstantNet {
            level: !c.level,
            ..c
        })
        .collect();
    let mut meta = parts.meta;
    if let Some(spec) = meta.generator.as_mut() {
        spec.protocol = spec.protocol.flip();
    }
    Netlist::from_parts(NetlistParts {
        protocol: parts.protocol.flip(),
        gates,
        constants,
        meta,
        ..parts
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{GateKind, Meta, NetlistBuilder, Protocol};

    fn detector() -> Netlist {
        let mut b = NetlistBuilder::new("cd");
        let p = b.input("x");
        let q = b.input("y");
        let l = b.or(&[p.rail1, p.rail0]);
        let r = b.or(&[q.rail1, q.rail0]);
        let root = b.c2(l, r);
        b.set_ack_out(root);
        b.finish(Meta::default())
    }

    #[test]
    fn rtz_detector_becomes_and_based() {
        let rto = dualize(&detector());
        assert_eq!(rto.protocol(), Protocol::Rto);
        let census = rto.census();
        assert_eq!(census.get(&GateKind::And2), Some(&2));
        assert_eq!(census.get(&GateKind::C2), Some(&1));
        assert_eq!(census.get(&GateKind::Or2), None);
        assert!(rto.gates().iter().all(|g| g.reset));
    }

    #[test]
    fn involution() {
        let n = detector();
        assert_eq!(dualize(&dualize(&n)), n);
    }
}
