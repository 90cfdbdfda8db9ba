//! Property checkers.
//!
//! Every checker reports a [`CheckOutcome`]. A failing outcome carries a
//! [`Counterexample`]: the exact stimulus (delay model included) plus the
//! failure message and an excerpt of the offending trace. [`replay`]
//! re-runs a counterexample and returns the failure it reproduces.

pub mod controls;
mod run;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::harness::{group_buses, EnvMode};
use crate::netlist::{dualize, DualRailValue, Netlist};
use crate::sim::{DelayModel, Event};

pub use run::{
    evaluate_open_loop, find_non_monotonic, run_arrival, run_handshake, ArrivalRun,
    ConformanceTracker, Failure, HandshakeChecks, HandshakeRun,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Functional,
    ProtocolConformance,
    Monotonicity,
    StrongIndication,
    WeakIndication,
    DelayInsensitivity,
    Duality,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Functional => "functional",
            CheckKind::ProtocolConformance => "protocol_conformance",
            CheckKind::Monotonicity => "monotonicity",
            CheckKind::StrongIndication => "strong_indication",
            CheckKind::WeakIndication => "weak_indication",
            CheckKind::DelayInsensitivity => "delay_insensitivity",
            CheckKind::Duality => "rtz_rto_duality",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HalfCycle {
    Data,
    Spacer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Withhold {
    /// Index into the netlist's input ports.
    pub port: usize,
    pub during: HalfCycle,
}

/// One arrival-order experiment on the input ports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrivalSpec {
    pub delay: DelayModel,
    /// Data bit per input port.
    pub bits: Vec<bool>,
    /// Order in which ports are applied, and later withdrawn.
    pub order: Vec<usize>,
    /// Time between successive ports.
    pub stagger: u64,
    pub withhold: Option<Withhold>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stimulus {
    Handshake {
        delay: DelayModel,
        mode: EnvMode,
        /// Operand values per cycle, one per input bus.
        operands: Vec<Vec<u64>>,
        /// Expected result per cycle; empty when no oracle applies.
        expected: Vec<u64>,
    },
    Arrival(ArrivalSpec),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub check: CheckKind,
    pub stimulus: Stimulus,
    pub message: String,
    pub trace: Vec<Event>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// Number of stimuli evaluated.
    pub cases: u64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
}

impl CheckOutcome {
    fn pass(check: CheckKind, cases: u64) -> Self {
        CheckOutcome {
            name: check.name().to_string(),
            passed: true,
            cases,
            detail: String::new(),
            counterexample: None,
        }
    }

    fn fail(check: CheckKind, cases: u64, stimulus: Stimulus, failure: Failure) -> Self {
        CheckOutcome {
            name: check.name().to_string(),
            passed: false,
            cases,
            detail: failure.message.clone(),
            counterexample: Some(Counterexample {
                check,
                stimulus,
                message: failure.message,
                trace: failure.trace,
            }),
        }
    }

    /// A failure that has no stimulus to replay (bad preconditions).
    fn unusable(check: CheckKind, detail: impl Into<String>) -> Self {
        CheckOutcome {
            name: check.name().to_string(),
            passed: false,
            cases: 0,
            detail: detail.into(),
            counterexample: None,
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        if self.passed {
            self.detail = detail.into();
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Coverage {
    Exhaustive,
    Random { count: usize, seed: u64 },
}

/// Largest operand space `Coverage::Exhaustive` will enumerate.
pub const EXHAUSTIVE_LIMIT: u64 = 1 << 20;

/// Operand tuples for the given bus widths, first bus varying slowest.
pub fn operand_list(widths: &[usize], coverage: &Coverage) -> Option<Vec<Vec<u64>>> {
    match coverage {
        Coverage::Exhaustive => {
            let bits: usize = widths.iter().sum();
            if bits >= 64 || (1u64 << bits) > EXHAUSTIVE_LIMIT {
                return None;
            }
            let mut out = vec![Vec::new()];
            for &w in widths {
                out = out
                    .into_iter()
                    .flat_map(|prefix| {
                        (0..1u64 << w).map(move |v| {
                            let mut next = prefix.clone();
                            next.push(v);
                            next
                        })
                    })
                    .collect();
            }
            Some(out)
        }
        Coverage::Random { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            Some(
                (0..*count)
                    .map(|_| {
                        widths
                            .iter()
                            .map(|&w| if w >= 64 { rng.random() } else { rng.random_range(0..1u64 << w) })
                            .collect()
                    })
                    .collect(),
            )
        }
    }
}

fn bus_widths(netlist: &Netlist) -> Vec<usize> {
    group_buses(netlist.input_ports()).iter().map(|b| b.width()).collect()
}

/// Plain integer product of all operands.
pub fn product_oracle(operands: &[u64]) -> u64 {
    operands.iter().fold(1u64, |acc, &v| acc.wrapping_mul(v))
}

/// Smallest stimulus reproducing a handshake failure: the failing cycle
/// alone when it still fails on its own, otherwise the whole prefix.
fn shrink_handshake(
    check: CheckKind,
    netlist: &Netlist,
    delay: &DelayModel,
    mode: EnvMode,
    operands: &[Vec<u64>],
    expected: &[u64],
    cycle: usize,
) -> Stimulus {
    let last = cycle.min(operands.len().saturating_sub(1));
    let single = Stimulus::Handshake {
        delay: delay.clone(),
        mode,
        operands: operands[last..=last].to_vec(),
        expected: expected.get(last).map(|&e| vec![e]).unwrap_or_default(),
    };
    if evaluate(check, netlist, &single).is_some() {
        return single;
    }
    Stimulus::Handshake {
        delay: delay.clone(),
        mode,
        operands: operands[..=last].to_vec(),
        expected: expected[..expected.len().min(last + 1)].to_vec(),
    }
}

fn handshake_checks(check: CheckKind) -> HandshakeChecks {
    HandshakeChecks {
        results: matches!(check, CheckKind::Functional | CheckKind::DelayInsensitivity),
        conformance: matches!(check, CheckKind::ProtocolConformance | CheckKind::DelayInsensitivity),
        monotonicity: matches!(check, CheckKind::Monotonicity | CheckKind::DelayInsensitivity),
    }
}

fn handshake_failure(check: CheckKind, run: HandshakeRun) -> Option<(usize, Failure)> {
    match check {
        CheckKind::Functional => run.results,
        CheckKind::ProtocolConformance => run.conformance,
        CheckKind::Monotonicity => run.monotonicity,
        _ => run.first_failure().cloned(),
    }
}

/// Evaluates one stimulus under one check. `None` means it passed.
pub fn evaluate(check: CheckKind, netlist: &Netlist, stimulus: &Stimulus) -> Option<Failure> {
    match (check, stimulus) {
        (CheckKind::Duality, _) => duality_failure(netlist, stimulus),
        (
            _,
            Stimulus::Handshake {
                delay,
                mode,
                operands,
                expected,
            },
        ) => {
            let run = run_handshake(netlist, delay, *mode, operands, expected, handshake_checks(check));
            handshake_failure(check, run).map(|(_, f)| f)
        }
        (_, Stimulus::Arrival(spec)) => {
            let run = match run_arrival(netlist, spec) {
                Ok(r) => r,
                Err(e) => return Some(Failure::new(e.to_string(), &[])),
            };
            match check {
                CheckKind::StrongIndication => strong_failure(netlist, spec, &run),
                CheckKind::WeakIndication => weak_failure(spec, &run),
                CheckKind::Monotonicity => find_non_monotonic(
                    netlist,
                    &run.trace.events,
                    &[(0, run.spacer_mark), (run.spacer_mark, run.trace.len())],
                    netlist.ack_in(),
                ),
                _ => {
                    let mut tracker = ConformanceTracker::new(netlist);
                    tracker.cycle(&run.trace.events, false).err()
                }
            }
        }
    }
}

/// Re-runs a counterexample. Returns the reproduced failure, or `None`
/// if the stimulus now passes.
pub fn replay(netlist: &Netlist, cex: &Counterexample) -> Option<Failure> {
    evaluate(cex.check, netlist, &cex.stimulus)
}

fn handshake_check(
    check: CheckKind,
    netlist: &Netlist,
    delay: &DelayModel,
    mode: EnvMode,
    operands: &[Vec<u64>],
    expected: &[u64],
) -> CheckOutcome {
    let run = run_handshake(netlist, delay, mode, operands, expected, handshake_checks(check));
    match handshake_failure(check, run) {
        None => CheckOutcome::pass(check, operands.len() as u64),
        Some((cycle, failure)) => {
            let stimulus = shrink_handshake(check, netlist, delay, mode, operands, expected, cycle);
            CheckOutcome::fail(check, cycle as u64 + 1, stimulus, failure)
        }
    }
}

/// Every operand tuple in `coverage` must produce `oracle(operands)`.
pub fn check_functional(
    netlist: &Netlist,
    oracle: &dyn Fn(&[u64]) -> u64,
    coverage: &Coverage,
    delay: &DelayModel,
) -> CheckOutcome {
    let Some(operands) = operand_list(&bus_widths(netlist), coverage) else {
        return CheckOutcome::unusable(CheckKind::Functional, "operand space too large for exhaustive coverage");
    };
    let expected: Vec<u64> = operands.iter().map(|o| oracle(o)).collect();
    handshake_check(CheckKind::Functional, netlist, delay, EnvMode::Settled, &operands, &expected)
}

/// Every port passes spacer, data, spacer once per cycle, never ILLEGAL.
pub fn check_protocol_conformance(
    netlist: &Netlist,
    operands: &[Vec<u64>],
    delay: &DelayModel,
    mode: EnvMode,
) -> CheckOutcome {
    handshake_check(CheckKind::ProtocolConformance, netlist, delay, mode, operands, &[])
}

/// Runs `stimulus` and checks the trace for non-monotonic activity.
pub fn check_monotonicity(netlist: &Netlist, stimulus: &Stimulus) -> CheckOutcome {
    match evaluate(CheckKind::Monotonicity, netlist, stimulus) {
        None => CheckOutcome::pass(CheckKind::Monotonicity, 1),
        Some(f) => CheckOutcome::fail(CheckKind::Monotonicity, 1, stimulus.clone(), f),
    }
}

/// Functional, conformance and monotonicity over one sequence, sharing a
/// single simulation.
pub fn check_handshake_suite(
    netlist: &Netlist,
    operands: &[Vec<u64>],
    expected: &[u64],
    delay: &DelayModel,
    mode: EnvMode,
) -> (HandshakeRun, [CheckOutcome; 3]) {
    let all = HandshakeChecks {
        results: true,
        conformance: true,
        monotonicity: true,
    };
    let run = run_handshake(netlist, delay, mode, operands, expected, all);
    let n = operands.len() as u64;
    let outcome = |check: CheckKind, failure: &Option<(usize, Failure)>| match failure {
        None => CheckOutcome::pass(check, n),
        Some((cycle, f)) => CheckOutcome::fail(
            check,
            *cycle as u64 + 1,
            shrink_handshake(check, netlist, delay, mode, operands, expected, *cycle),
            f.clone(),
        ),
    };
    let outcomes = [
        outcome(CheckKind::Functional, &run.results),
        outcome(CheckKind::ProtocolConformance, &run.conformance),
        outcome(CheckKind::Monotonicity, &run.monotonicity),
    ];
    (run, outcomes)
}

fn output_rails(netlist: &Netlist) -> Vec<crate::netlist::NetId> {
    netlist
        .output_ports()
        .iter()
        .flat_map(|p| [p.rail1, p.rail0])
        .collect()
}

fn strong_failure(netlist: &Netlist, spec: &ArrivalSpec, run: &ArrivalRun) -> Option<Failure> {
    let outs = output_rails(netlist);
    let events = &run.trace.events;
    match spec.withhold {
        Some(w) => {
            let (values, want) = match w.during {
                HalfCycle::Data => (&run.after_data, DualRailValue::Spacer),
                HalfCycle::Spacer => (run.after_spacer.as_ref()?, DualRailValue::Spacer),
            };
            let moved = match w.during {
                HalfCycle::Data => values.iter().position(|&v| v != want),
                HalfCycle::Spacer => values.iter().position(|&v| v == want),
            };
            moved.map(|i| {
                Failure::new(
                    format!(
                        "output {} reached {:?} with input {} withheld during {:?}",
                        netlist.output_ports()[i].name,
                        values[i],
                        netlist.input_ports()[w.port].name,
                        w.during
                    ),
                    events,
                )
            })
        }
        None => {
            let early_data = events[..run.spacer_mark]
                .iter()
                .find(|e| outs.contains(&e.net) && e.time < run.last_data);
            if let Some(e) = early_data {
                return Some(Failure::new(
                    format!("output rail {} moved at t={} before the last input arrived at t={}", e.net, e.time, run.last_data),
                    events,
                ));
            }
            let last_spacer = run.last_spacer?;
            let early_spacer = events[run.spacer_mark..]
                .iter()
                .find(|e| outs.contains(&e.net) && e.time < last_spacer);
            if let Some(e) = early_spacer {
                return Some(Failure::new(
                    format!("output rail {} returned at t={} before the last input was withdrawn at t={}", e.net, e.time, last_spacer),
                    events,
                ));
            }
            weak_failure(spec, run)
        }
    }
}

fn weak_failure(spec: &ArrivalSpec, run: &ArrivalRun) -> Option<Failure> {
    let events = &run.trace.events;
    let all_data = |v: &[DualRailValue]| v.iter().all(|x| x.is_data());
    let all_spacer = |v: &[DualRailValue]| v.iter().all(|&x| x == DualRailValue::Spacer);
    match spec.withhold {
        Some(Withhold { during: HalfCycle::Data, port }) => all_data(&run.after_data).then(|| {
            Failure::new(format!("every output reached data while input {port} was withheld"), events)
        }),
        Some(Withhold { during: HalfCycle::Spacer, port }) => {
            let after = run.after_spacer.as_ref()?;
            all_spacer(after).then(|| {
                Failure::new(format!("every output returned to spacer while input {port} was withheld"), events)
            })
        }
        None => {
            if !all_data(&run.after_data) {
                return Some(Failure::new(format!("outputs incomplete after all inputs arrived: {:?}", run.after_data), events));
            }
            match &run.after_spacer {
                Some(after) if !all_spacer(after) => {
                    Some(Failure::new(format!("outputs did not return to spacer: {after:?}"), events))
                }
                _ => None,
            }
        }
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in permutations(k - 1) {
        for pos in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(pos, k - 1);
            out.push(p);
        }
    }
    out.sort();
    out
}

/// Stagger used by the arrival checks: long enough for the circuit to
/// settle completely between two arrivals.
pub fn settle_stagger(netlist: &Netlist, delay: &DelayModel) -> u64 {
    let max = netlist
        .gates()
        .iter()
        .map(|g| delay.delay(g.id, g.kind).unwrap_or(1))
        .max()
        .unwrap_or(1);
    50 * max
}

/// Exhaustive arrival stimuli for a small cell: every codeword and every
/// order, plus every single-port withhold in both half-cycles.
fn exhaustive_arrivals(netlist: &Netlist, delay: &DelayModel) -> Vec<ArrivalSpec> {
    let k = netlist.input_ports().len();
    let stagger = settle_stagger(netlist, delay);
    let mut out = Vec::new();
    for word in 0..1u64 << k {
        let bits: Vec<bool> = (0..k).map(|i| (word >> i) & 1 == 1).collect();
        for order in permutations(k) {
            out.push(ArrivalSpec {
                delay: delay.clone(),
                bits: bits.clone(),
                order,
                stagger,
                withhold: None,
            });
        }
        for port in 0..k {
            for during in [HalfCycle::Data, HalfCycle::Spacer] {
                out.push(ArrivalSpec {
                    delay: delay.clone(),
                    bits: bits.clone(),
                    order: (0..k).collect(),
                    stagger,
                    withhold: Some(Withhold { port, during }),
                });
            }
        }
    }
    out
}

/// Seeded arrival stimuli for larger circuits. Sample `i` withholds port
/// `i mod k`, alternating half-cycles on each pass over the ports, so
/// `2k` samples withhold every port in both halves. Every fourth sample
/// is also run complete.
fn sampled_arrivals(netlist: &Netlist, delay: &DelayModel, samples: usize, seed: u64) -> Vec<ArrivalSpec> {
    let k = netlist.input_ports().len();
    let stagger = settle_stagger(netlist, delay);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for i in 0..samples {
        let bits: Vec<bool> = (0..k).map(|_| rng.random()).collect();
        let mut order: Vec<usize> = (0..k).collect();
        order.shuffle(&mut rng);
        let withhold = Withhold {
            port: i % k,
            during: if (i / k).is_multiple_of(2) { HalfCycle::Data } else { HalfCycle::Spacer },
        };
        if i % 4 == 0 {
            out.push(ArrivalSpec {
                delay: delay.clone(),
                bits: bits.clone(),
                order: order.clone(),
                stagger,
                withhold: None,
            });
        }
        out.push(ArrivalSpec {
            delay: delay.clone(),
            bits,
            order,
            stagger,
            withhold: Some(withhold),
        });
    }
    out
}

fn arrival_check(check: CheckKind, netlist: &Netlist, stimuli: Vec<ArrivalSpec>) -> CheckOutcome {
    if netlist.input_ports().is_empty() {
        return CheckOutcome::unusable(check, "netlist has no input ports");
    }
    let failure = stimuli
        .par_iter()
        .enumerate()
        .find_map_first(|(i, spec)| {
            evaluate(check, netlist, &Stimulus::Arrival(spec.clone())).map(|f| (i, f))
        });
    match failure {
        None => CheckOutcome::pass(check, stimuli.len() as u64),
        Some((i, f)) => CheckOutcome::fail(check, i as u64 + 1, Stimulus::Arrival(stimuli[i].clone()), f),
    }
}

/// Largest input count for which arrival orders are enumerated.
pub const EXHAUSTIVE_ARRIVAL_PORTS: usize = 3;

/// No output leaves spacer before the last input arrives, and none
/// returns to spacer before the last input is withdrawn. Exhaustive over
/// codewords and orders; needs at most three input ports.
pub fn check_strong_indication(netlist: &Netlist, delay: &DelayModel) -> CheckOutcome {
    let k = netlist.input_ports().len();
    if k > EXHAUSTIVE_ARRIVAL_PORTS {
        return CheckOutcome::unusable(
            CheckKind::StrongIndication,
            format!("{k} input ports; exhaustive arrival orders need at most {EXHAUSTIVE_ARRIVAL_PORTS}"),
        );
    }
    arrival_check(CheckKind::StrongIndication, netlist, exhaustive_arrivals(netlist, delay))
}

/// Not every output completes while an input is withheld, and every
/// output completes once all inputs are present. Exhaustive for cells
/// with up to three inputs, otherwise `samples` seeded stimuli.
pub fn check_weak_indication(netlist: &Netlist, delay: &DelayModel, samples: usize, seed: u64) -> CheckOutcome {
    let stimuli = if netlist.input_ports().len() <= EXHAUSTIVE_ARRIVAL_PORTS {
        exhaustive_arrivals(netlist, delay)
    } else {
        sampled_arrivals(netlist, delay, samples, seed)
    };
    arrival_check(CheckKind::WeakIndication, netlist, stimuli)
}

/// Runs the same operands under `seeds` random delay assignments (reactive
/// environment) and requires the results of the unit-delay run on every
/// seed, with conformance and monotonicity holding throughout.
pub fn check_delay_insensitivity(
    netlist: &Netlist,
    operands: &[Vec<u64>],
    seeds: std::ops::Range<u64>,
    range: (u64, u64),
) -> CheckOutcome {
    let check = CheckKind::DelayInsensitivity;
    let reference = run_handshake(
        netlist,
        &DelayModel::Unit,
        EnvMode::Settled,
        operands,
        &[],
        HandshakeChecks::default(),
    );
    if let Some((_, f)) = reference.first_failure() {
        return CheckOutcome::unusable(check, format!("unit-delay reference run failed: {}", f.message));
    }
    let expected: Vec<u64> = reference.reports.iter().map(|r| r.result).collect();
    let seed_count = seeds.end.saturating_sub(seeds.start);
    let failure = seeds.into_par_iter().find_map_first(|seed| {
        let delay = DelayModel::RandomPerGate {
            lo: range.0,
            hi: range.1,
            seed,
        };
        let run = run_handshake(netlist, &delay, EnvMode::Reactive, operands, &expected, handshake_checks(check));
        run.first_failure().cloned().map(|(cycle, f)| (delay, cycle, f))
    });
    match failure {
        None => CheckOutcome::pass(check, seed_count * operands.len() as u64),
        Some((delay, cycle, f)) => {
            let stimulus = shrink_handshake(check, netlist, &delay, EnvMode::Reactive, operands, &expected, cycle);
            CheckOutcome::fail(check, seed_count, stimulus, f)
        }
    }
}

fn duality_failure(netlist: &Netlist, stimulus: &Stimulus) -> Option<Failure> {
    let dual = dualize(netlist);
    match stimulus {
        Stimulus::Handshake { delay, mode, operands, .. } => {
            let a = run_handshake(netlist, delay, *mode, operands, &[], HandshakeChecks::default());
            let b = run_handshake(&dual, delay, *mode, operands, &[], HandshakeChecks::default());
            if let Some((_, f)) = a.first_failure().or(b.first_failure()) {
                return Some(f.clone());
            }
            a.reports.iter().zip(&b.reports).find(|(x, y)| x.result != y.result).map(|(x, y)| {
                Failure::new(
                    format!(
                        "operands {:?}: {} gives {}, {} gives {}",
                        x.operands,
                        netlist.protocol(),
                        x.result,
                        dual.protocol(),
                        y.result
                    ),
                    &[],
                )
            })
        }
        Stimulus::Arrival(spec) => {
            let a = run_arrival(netlist, spec);
            let b = run_arrival(&dual, spec);
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    let decoded = |v: &[DualRailValue]| v.iter().map(|x| x.bit()).collect::<Vec<_>>();
                    let (da, db) = (decoded(&a.after_data), decoded(&b.after_data));
                    (da != db || da.iter().any(Option::is_none)).then(|| {
                        Failure::new(
                            format!(
                                "inputs {:?}: {} gives {:?}, {} gives {:?}",
                                spec.bits,
                                netlist.protocol(),
                                a.after_data,
                                dual.protocol(),
                                b.after_data
                            ),
                            &a.trace.events,
                        )
                    })
                }
                (Err(e), _) | (_, Err(e)) => Some(Failure::new(e.to_string(), &[])),
            }
        }
    }
}

fn census_is_dual(a: &Netlist, b: &Netlist) -> bool {
    let ca = a.census();
    let cb = b.census();
    ca.len() == cb.len()
        && ca
            .iter()
            .all(|(kind, count)| cb.get(&kind.dual()) == Some(count))
}

/// The netlist and its dual agree on every decoded result and have the
/// same gate census with AND and OR swapped. Handshake netlists are run
/// over `coverage`; cells are evaluated on every input codeword.
pub fn check_rtz_rto_duality(netlist: &Netlist, coverage: &Coverage, delay: &DelayModel) -> CheckOutcome {
    let check = CheckKind::Duality;
    let dual = dualize(netlist);
    if !census_is_dual(netlist, &dual) || dual.gates().len() != netlist.gates().len() {
        return CheckOutcome::unusable(check, "dual gate census does not mirror the original");
    }
    if netlist.has_handshake() {
        let Some(operands) = operand_list(&bus_widths(netlist), coverage) else {
            return CheckOutcome::unusable(check, "operand space too large for exhaustive coverage");
        };
        let stimulus = Stimulus::Handshake {
            delay: delay.clone(),
            mode: EnvMode::Settled,
            operands: operands.clone(),
            expected: Vec::new(),
        };
        match duality_failure(netlist, &stimulus) {
            None => CheckOutcome::pass(check, operands.len() as u64),
            Some(f) => CheckOutcome::fail(check, operands.len() as u64, stimulus, f),
        }
    } else {
        let k = netlist.input_ports().len();
        if k >= 20 {
            return CheckOutcome::unusable(check, "too many cell inputs to enumerate");
        }
        let stimuli: Vec<Stimulus> = (0..1u64 << k)
            .map(|word| {
                Stimulus::Arrival(ArrivalSpec {
                    delay: delay.clone(),
                    bits: (0..k).map(|i| (word >> i) & 1 == 1).collect(),
                    order: (0..k).collect(),
                    stagger: 0,
                    withhold: None,
                })
            })
            .collect();
        for (i, s) in stimuli.iter().enumerate() {
            if let Some(f) = duality_failure(netlist, s) {
                return CheckOutcome::fail(check, i as u64 + 1, s.clone(), f);
            }
        }
        CheckOutcome::pass(check, stimuli.len() as u64)
    }
}

#[cfg(test)]
mod tests;
