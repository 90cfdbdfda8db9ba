//! Acceptance gate: one PASS/FAIL line per criterion.

use std::process::ExitCode;
use std::time::Instant;

use rayon::prelude::*;

use qdi_core::cells::{make_and2_strong, make_full_adder};
use qdi_core::harness::{reports_to_json, write_reports_csv, EnvMode, Harness};
use qdi_core::metrics::{run_bench, AreaTable, BenchTable};
use qdi_core::multiplier::structure_stats;
use qdi_core::netlist::serial;
use qdi_core::verify::{
    check_delay_insensitivity, check_functional, check_handshake_suite, check_monotonicity,
    check_rtz_rto_duality, check_strong_indication, check_weak_indication, controls, operand_list,
    product_oracle, replay, ArrivalSpec, CheckOutcome, Coverage, Stimulus,
};
use qdi_core::{
    dualize, generate, CycleReport, DelayModel, FullAdderKind, MultiplierSpec, Netlist, Protocol,
};

const SEEDS: u64 = 100;
const LARGE_PAIRS: usize = 10_000;
const WEAK_SAMPLES: usize = 256;

struct Gate {
    failed: usize,
}

impl Gate {
    fn record(&mut self, id: u8, title: &str, problems: &[String], summary: String) {
        if problems.is_empty() {
            println!("criterion {id:>2} {title}: PASS ({summary})");
        } else {
            self.failed += 1;
            println!("criterion {id:>2} {title}: FAIL ({summary})");
            for p in problems.iter().take(10) {
                println!("    {p}");
            }
            if problems.len() > 10 {
                println!("    ... {} more", problems.len() - 10);
            }
        }
    }
}

fn designs(n: usize) -> Vec<MultiplierSpec> {
    let mut out = Vec::new();
    for kind in [FullAdderKind::Dims, FullAdderKind::Weak] {
        for p in [Protocol::Rtz, Protocol::Rto] {
            out.push(MultiplierSpec::new(n, kind, p));
        }
    }
    out
}

/// One simulated sequence from criterion 1, kept for criteria 2, 4 and 5.
struct Run {
    label: String,
    unit: bool,
    outcomes: [CheckOutcome; 3],
    reports: Vec<CycleReport>,
}

fn suite(net: &Netlist, ops: &[Vec<u64>], delay: DelayModel, mode: EnvMode, label: String) -> Run {
    let expected: Vec<u64> = ops.iter().map(|o| product_oracle(o)).collect();
    let (run, outcomes) = check_handshake_suite(net, ops, &expected, &delay, mode);
    Run {
        label,
        unit: delay == DelayModel::Unit,
        outcomes,
        reports: run.reports,
    }
}

fn functional_runs() -> Vec<Run> {
    let mut runs = Vec::new();
    let small = operand_list(&[4, 4], &Coverage::Exhaustive).unwrap();
    for spec in designs(4) {
        let net = generate(&spec).unwrap();
        runs.push(suite(&net, &small, DelayModel::Unit, EnvMode::Settled, format!("{} unit", spec.name())));
        let seeded: Vec<Run> = (0..SEEDS)
            .into_par_iter()
            .map(|seed| {
                suite(
                    &net,
                    &small,
                    DelayModel::random(seed),
                    EnvMode::Reactive,
                    format!("{} random@{seed}", spec.name()),
                )
            })
            .collect();
        runs.extend(seeded);
    }
    let large = operand_list(&[8, 8], &Coverage::Random { count: LARGE_PAIRS, seed: 8 }).unwrap();
    let nets: Vec<(MultiplierSpec, Netlist)> = designs(8).into_iter().map(|s| (s, generate(&s).unwrap())).collect();
    let large_runs: Vec<Run> = nets
        .par_iter()
        .flat_map_iter(|(spec, net)| {
            [
                suite(net, &large, DelayModel::Unit, EnvMode::Settled, format!("{} unit", spec.name())),
                suite(net, &large, DelayModel::random(8), EnvMode::Reactive, format!("{} random@8", spec.name())),
            ]
        })
        .collect();
    runs.extend(large_runs);
    runs
}

fn property_failures(runs: &[Run], index: usize) -> Vec<String> {
    runs.iter()
        .filter(|r| !r.outcomes[index].passed)
        .map(|r| format!("{}: {}", r.label, r.outcomes[index].detail))
        .collect()
}

fn criterion_3() -> (Vec<String>, String) {
    let mut problems = Vec::new();
    let mut cases = 0;
    let mut expect = |what: String, o: CheckOutcome, want: bool| {
        cases += o.cases;
        if o.passed != want {
            problems.push(format!("{what}: passed={} {}", o.passed, o.detail));
        }
    };
    for p in [Protocol::Rtz, Protocol::Rto] {
        let and = make_and2_strong(p).netlist;
        expect(format!("AND cell {p} strong"), check_strong_indication(&and, &DelayModel::Unit), true);
        let dims = make_full_adder(FullAdderKind::Dims, p).netlist;
        expect(format!("DIMS adder {p} strong"), check_strong_indication(&dims, &DelayModel::Unit), true);
        let weak = make_full_adder(FullAdderKind::Weak, p).netlist;
        expect(format!("weak adder {p} weak"), check_weak_indication(&weak, &DelayModel::Unit, 0, 0), true);
        expect(format!("weak adder {p} strong"), check_strong_indication(&weak, &DelayModel::Unit), false);
    }
    for spec in designs(4) {
        let net = generate(&spec).unwrap();
        for (delay, seed) in [(DelayModel::Unit, 1), (DelayModel::random(3), 3)] {
            let o = check_weak_indication(&net, &delay, WEAK_SAMPLES, seed);
            expect(format!("{} weak under {delay}", spec.name()), o, true);
        }
    }
    (problems, format!("{cases} arrival stimuli"))
}

fn criterion_4(runs: &[Run]) -> (Vec<String>, String) {
    let mut problems = property_failures(runs, 2);
    let cell = controls::majority_adder(Protocol::Rtz).netlist;
    let stim = Stimulus::Arrival(ArrivalSpec {
        delay: DelayModel::Unit,
        bits: vec![true, true, true],
        order: vec![0, 1, 2],
        stagger: 0,
        withhold: None,
    });
    let o = check_monotonicity(&cell, &stim);
    let flagged = if o.passed {
        problems.push("majority-carry control was not flagged".into());
        String::new()
    } else {
        format!("; majority control flagged: {}", o.detail)
    };
    (problems, format!("{} runs monotonic{flagged}", runs.len()))
}

fn criterion_5(runs: &[Run]) -> (Vec<String>, String) {
    let mut problems = Vec::new();
    let mut cycles = 0;
    let mut check = |label: &str, unit: bool, reports: &[CycleReport]| {
        for r in reports {
            cycles += 1;
            if unit && r.forward != r.reverse {
                problems.push(format!("{label} cycle {}: forward {} reverse {}", r.cycle, r.forward, r.reverse));
            }
            if r.cycle_time != r.forward + r.reverse {
                problems.push(format!("{label} cycle {}: cycle time {} != {} + {}", r.cycle, r.cycle_time, r.forward, r.reverse));
            }
        }
    };
    for r in runs {
        check(&r.label, r.unit, &r.reports);
    }
    // Other sizes and cell-tree options under unit delays.
    for n in [2usize, 3, 5, 6] {
        for mut spec in designs(n) {
            for (c3, or4) in [(false, false), (true, false), (false, true), (true, true)] {
                spec.c3_as_tree = c3;
                spec.or4_as_tree = or4;
                let net = generate(&spec).unwrap();
                let ops = operand_list(&[n, n], &Coverage::Random { count: 64, seed: n as u64 }).unwrap();
                let mut h = Harness::new(&net, &DelayModel::Unit).unwrap();
                let reports = h.run_sequence(ops).unwrap();
                check(&spec.name(), true, &reports);
            }
        }
    }
    (problems, format!("{cycles} cycles"))
}

fn criterion_6() -> (Vec<String>, String) {
    let mut problems = Vec::new();
    for n in [2usize, 4, 8] {
        for spec in designs(n) {
            let s = structure_stats(&generate(&spec).unwrap()).unwrap();
            let got = (s.and_cells, s.full_adders, s.constant_carries, s.product_width);
            let want = (n * n, n * (n - 1), n, 2 * n);
            if got != want {
                problems.push(format!("{}: {got:?} != {want:?}", spec.name()));
            }
        }
    }
    (problems, "N = 2, 4, 8 x 4 designs".into())
}

fn criterion_7() -> (Vec<String>, String) {
    let mut problems = Vec::new();
    let mut checked = 0;
    for n in [2usize, 4, 8] {
        for mut spec in designs(n) {
            for trees in [false, true] {
                spec.c3_as_tree = trees;
                spec.or4_as_tree = trees;
                let net = generate(&spec).unwrap();
                checked += 1;
                if dualize(&dualize(&net)) != net {
                    problems.push(format!("{}: dualize is not an involution", spec.name()));
                }
            }
        }
    }
    let mut cases = 0;
    for kind in [FullAdderKind::Dims, FullAdderKind::Weak] {
        let net = generate(&MultiplierSpec::new(4, kind, Protocol::Rtz)).unwrap();
        let o = check_rtz_rto_duality(&net, &Coverage::Exhaustive, &DelayModel::Unit);
        cases += o.cases;
        if !o.passed || o.cases != 256 {
            problems.push(format!("{}: {} cases, {}", net.name(), o.cases, o.detail));
        }
    }
    let cell = make_and2_strong(Protocol::Rtz).netlist;
    let o = check_rtz_rto_duality(&cell, &Coverage::Exhaustive, &DelayModel::Unit);
    if !o.passed || o.cases != 4 {
        problems.push(format!("AND cell: {} cases, {}", o.cases, o.detail));
    }
    (problems, format!("{checked} involutions, {cases} multiplier pairs, {} cell pairs", o.cases))
}

fn bench() -> BenchTable {
    let specs: Vec<MultiplierSpec> = designs(4).into_iter().chain(designs(8)).collect();
    run_bench(&specs, &DelayModel::Unit, 1, &AreaTable::default())
}

fn criterion_8(table: &BenchTable) -> (Vec<String>, String) {
    let mut problems: Vec<String> = table.failures.iter().map(|(d, m)| format!("{d}: {m}")).collect();
    let mut summary = Vec::new();
    for n in [4usize, 8] {
        let Some(group) = table.groups.iter().find(|g| g.n == Some(n)) else {
            problems.push(format!("no {n}x{n} group"));
            continue;
        };
        for p in [Protocol::Rtz, Protocol::Rto] {
            let rows: Vec<_> = group.rows.iter().filter(|r| r.spec.map(|s| s.protocol) == Some(p)).collect();
            let cycle = |k: FullAdderKind| {
                rows.iter()
                    .find(|r| r.spec.map(|s| s.fa_kind) == Some(k))
                    .map(|r| r.cycle_time.mean)
            };
            match (cycle(FullAdderKind::Weak), cycle(FullAdderKind::Dims)) {
                (Some(w), Some(d)) => {
                    summary.push(format!("{n}x{n} {p} weak {w:.2} dims {d:.2}"));
                    if w > d {
                        problems.push(format!("{n}x{n} {p}: weak cycle {w} > DIMS cycle {d}"));
                    }
                }
                _ => problems.push(format!("{n}x{n} {p}: missing design")),
            }
            let ones = rows.iter().filter(|r| r.pctp_normalized == Some(1.0)).count();
            if ones != 1 {
                problems.push(format!("{n}x{n} {p}: {ones} designs normalized to 1.0"));
            }
        }
    }
    (problems, summary.join(", "))
}

/// Everything criterion 9 compares, rendered to bytes.
fn artifacts() -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let net = generate(&MultiplierSpec::new(4, FullAdderKind::Weak, Protocol::Rto)).unwrap();
    out.push(("netlist".into(), serial::serialize(&net).unwrap().into_bytes()));
    for (delay, mode) in [(DelayModel::Unit, EnvMode::Settled), (DelayModel::random(42), EnvMode::Reactive)] {
        let mut h = Harness::new(&net, &delay).unwrap().with_mode(mode).retain_trace(true);
        let ops = operand_list(&[4, 4], &Coverage::Random { count: 32, seed: 42 }).unwrap();
        let reports = h.run_sequence(ops).unwrap();
        out.push((format!("trace csv {delay}"), h.trace().to_csv().into_bytes()));
        let mut vcd = Vec::new();
        h.trace().write_vcd(&net, &mut vcd).unwrap();
        out.push((format!("trace vcd {delay}"), vcd));
        out.push((format!("reports json {delay}"), reports_to_json(&reports).unwrap().into_bytes()));
        let mut csv = Vec::new();
        write_reports_csv(&mut csv, &["a".to_string(), "b".to_string()], &reports).unwrap();
        out.push((format!("reports csv {delay}"), csv));
    }
    let table = bench();
    out.push(("bench text".into(), table.to_text().into_bytes()));
    out.push(("bench csv".into(), table.to_csv().into_bytes()));
    out.push(("bench json".into(), serde_json::to_vec(&table).unwrap()));
    out
}

fn criterion_9() -> (Vec<String>, String) {
    let first = artifacts();
    let second = artifacts();
    let mut problems = Vec::new();
    for ((name, a), (_, b)) in first.iter().zip(&second) {
        if a != b {
            problems.push(format!("{name} differs between runs"));
        }
    }
    let bytes: usize = first.iter().map(|(_, a)| a.len()).sum();
    (problems, format!("{} artifacts, {bytes} bytes compared", first.len()))
}

fn criterion_10() -> (Vec<String>, String) {
    let mut problems = Vec::new();
    let mut caught = Vec::new();
    let mut expect_failure = |name: &str, bad: &Netlist, good: Option<&Netlist>, o: CheckOutcome| {
        if o.passed {
            problems.push(format!("{name}: checker passed"));
            return;
        }
        let Some(cex) = o.counterexample else {
            problems.push(format!("{name}: no counterexample ({})", o.detail));
            return;
        };
        if replay(bad, &cex).is_none() {
            problems.push(format!("{name}: counterexample does not replay"));
            return;
        }
        if let Some(good) = good {
            if replay(good, &cex).is_some() {
                problems.push(format!("{name}: counterexample also fails the unmodified design"));
                return;
            }
        }
        caught.push(format!("{name} by {}", cex.check.name()));
    };

    let dims4 = generate(&MultiplierSpec::new(4, FullAdderKind::Dims, Protocol::Rtz)).unwrap();
    let swapped = controls::swap_sum_cout(&dims4, "fa[1][0]").unwrap();
    let o = check_functional(&swapped, &product_oracle, &Coverage::Exhaustive, &DelayModel::Unit);
    expect_failure("sum/cout swap", &swapped, Some(&dims4), o);

    let majority = controls::majority_adder(Protocol::Rtz).netlist;
    let stim = Stimulus::Arrival(ArrivalSpec {
        delay: DelayModel::Unit,
        bits: vec![true, true, true],
        order: vec![0, 1, 2],
        stagger: 0,
        withhold: None,
    });
    expect_failure("majority carry", &majority, None, check_monotonicity(&majority, &stim));

    let stub = controls::early_completion_stub(Protocol::Rtz).netlist;
    expect_failure("early stub", &stub, None, check_weak_indication(&stub, &DelayModel::Unit, 0, 0));

    let weak4 = generate(&MultiplierSpec::new(4, FullAdderKind::Weak, Protocol::Rtz)).unwrap();
    let fork = controls::delayed_fork(&weak4, 40).unwrap();
    let ops = operand_list(&[4, 4], &Coverage::Exhaustive).unwrap();
    let o = check_delay_insensitivity(&fork, &ops[..64], 0..SEEDS, (1, 20));
    expect_failure("delayed fork", &fork, None, o);

    (problems, caught.join(", "))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut gate = Gate { failed: 0 };

    let runs = functional_runs();
    let cycles: usize = runs.iter().map(|r| r.reports.len()).sum();
    gate.record(
        1,
        "functional correctness",
        &property_failures(&runs, 0),
        format!("{} runs, {cycles} cycles", runs.len()),
    );
    gate.record(
        2,
        "protocol conformance",
        &property_failures(&runs, 1),
        format!("{} runs", runs.len()),
    );
    let (p, s) = criterion_3();
    gate.record(3, "indication", &p, s);
    let (p, s) = criterion_4(&runs);
    gate.record(4, "monotonicity", &p, s);
    let (p, s) = criterion_5(&runs);
    gate.record(5, "latency identity", &p, s);
    let (p, s) = criterion_6();
    gate.record(6, "structure", &p, s);
    let (p, s) = criterion_7();
    gate.record(7, "duality", &p, s);
    let (p, s) = criterion_8(&bench());
    gate.record(8, "relative ordering", &p, s);
    let (p, s) = criterion_9();
    gate.record(9, "determinism", &p, s);
    let (p, s) = criterion_10();
    gate.record(10, "checker sensitivity", &p, s);

    println!(
        "acceptance: {} of 10 criteria passed in {:.1}s",
        10 - gate.failed,
        start.elapsed().as_secs_f64()
    );
    if gate.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
