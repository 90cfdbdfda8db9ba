use super::controls::*;
use super::*;
use crate::cells::{make_and2_strong, make_full_adder, FullAdderKind};
use crate::multiplier::{generate, MultiplierSpec};
use crate::netlist::Protocol;

fn mul(n: usize, kind: FullAdderKind, p: Protocol) -> Netlist {
    generate(&MultiplierSpec::new(n, kind, p)).unwrap()
}

#[test]
fn operand_lists() {
    let all = operand_list(&[2, 3], &Coverage::Exhaustive).unwrap();
    assert_eq!(all.len(), 32);
    assert_eq!(all[0], [0, 0]);
    assert_eq!(all[1], [0, 1]);
    assert_eq!(all[31], [3, 7]);
    assert!(operand_list(&[16, 16], &Coverage::Exhaustive).is_none());
    let r = Coverage::Random { count: 10, seed: 4 };
    assert_eq!(operand_list(&[4, 4], &r), operand_list(&[4, 4], &r));
    assert!(operand_list(&[4, 4], &r).unwrap().iter().flatten().all(|&v| v < 16));
}

#[test]
fn permutation_count() {
    assert_eq!(permutations(3).len(), 6);
    assert_eq!(permutations(0), vec![Vec::<usize>::new()]);
}

#[test]
fn functional_small() {
    for p in [Protocol::Rtz, Protocol::Rto] {
        let n = mul(2, FullAdderKind::Weak, p);
        let o = check_functional(&n, &|ops| ops[0] * ops[1], &Coverage::Exhaustive, &DelayModel::Unit);
        assert!(o.passed, "{o:?}");
        assert_eq!(o.cases, 16);
    }
}

#[test]
fn empty_trace_is_monotonic() {
    let n = mul(2, FullAdderKind::Dims, Protocol::Rtz);
    assert!(find_non_monotonic(&n, &[], &[(0, 0)], None).is_none());
}

#[test]
fn and_cell_is_strong() {
    for p in [Protocol::Rtz, Protocol::Rto] {
        let o = check_strong_indication(&make_and2_strong(p).netlist, &DelayModel::Unit);
        assert!(o.passed, "{o:?}");
    }
}

#[test]
fn adders_indication() {
    let dims = make_full_adder(FullAdderKind::Dims, Protocol::Rtz).netlist;
    let weak = make_full_adder(FullAdderKind::Weak, Protocol::Rtz).netlist;
    assert!(check_strong_indication(&dims, &DelayModel::Unit).passed);
    let o = check_strong_indication(&weak, &DelayModel::Unit);
    assert!(!o.passed);
    let cex = o.counterexample.unwrap();
    assert!(replay(&weak, &cex).is_some());
    assert!(check_weak_indication(&weak, &DelayModel::Unit, 0, 0).passed);
    assert!(check_weak_indication(&dims, &DelayModel::Unit, 0, 0).passed);
}

#[test]
fn stub_fails_weak_indication() {
    let stub = early_completion_stub(Protocol::Rtz).netlist;
    let o = check_weak_indication(&stub, &DelayModel::Unit, 0, 0);
    assert!(!o.passed);
    assert!(replay(&stub, &o.counterexample.unwrap()).is_some());
}

#[test]
fn majority_carry_flagged() {
    let cell = majority_adder(Protocol::Rtz).netlist;
    let stim = Stimulus::Arrival(ArrivalSpec {
        delay: DelayModel::Unit,
        bits: vec![true, true, true],
        order: vec![0, 1, 2],
        stagger: 0,
        withhold: None,
    });
    let o = check_monotonicity(&cell, &stim);
    assert!(!o.passed, "{o:?}");
    assert!(o.detail.contains("controlling"), "{}", o.detail);
    let weak = make_full_adder(FullAdderKind::Weak, Protocol::Rtz).netlist;
    assert!(check_monotonicity(&weak, &stim).passed);
}

#[test]
fn mutation_fails_functional() {
    let n = mul(4, FullAdderKind::Dims, Protocol::Rtz);
    let bad = swap_sum_cout(&n, "fa[1][0]").unwrap();
    let o = check_functional(&bad, &product_oracle, &Coverage::Exhaustive, &DelayModel::Unit);
    assert!(!o.passed);
    let cex = o.counterexample.clone().unwrap();
    assert!(replay(&bad, &cex).is_some());
    assert!(replay(&n, &cex).is_none());
}

#[test]
fn duality_cells_and_multipliers() {
    let cell = make_and2_strong(Protocol::Rtz).netlist;
    let o = check_rtz_rto_duality(&cell, &Coverage::Exhaustive, &DelayModel::Unit);
    assert!(o.passed, "{o:?}");
    assert_eq!(o.cases, 4);
    let n = mul(2, FullAdderKind::Dims, Protocol::Rtz);
    assert!(check_rtz_rto_duality(&n, &Coverage::Exhaustive, &DelayModel::Unit).passed);
}
