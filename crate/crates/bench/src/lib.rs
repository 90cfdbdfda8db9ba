//! Shared fixtures for the benchmarks.

use qdi_core::verify::{operand_list, Coverage};
use qdi_core::{generate, FullAdderKind, MultiplierSpec, Netlist, Protocol};

/// Every FA kind and protocol at width `n`.
pub fn designs(n: usize) -> Vec<Netlist> {
    let mut out = Vec::new();
    for kind in [FullAdderKind::Dims, FullAdderKind::Weak] {
        for p in [Protocol::Rtz, Protocol::Rto] {
            out.push(generate(&MultiplierSpec::new(n, kind, p)).expect("valid width"));
        }
    }
    out
}

/// `count` seeded operand pairs of width `n`.
pub fn pairs(n: usize, count: usize) -> Vec<Vec<u64>> {
    operand_list(&[n, n], &Coverage::Random { count, seed: 1 }).expect("random coverage")
}
