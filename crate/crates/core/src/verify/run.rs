//! Stimulus runners and the trace-level checks shared by the checkers.

use std::collections::BTreeSet;

use crate::harness::{CycleReport, EnvMode, Harness};
use crate::netlist::{decode, encode, DualRailValue, NetId, Netlist, Protocol};
use crate::sim::{DelayModel, Event, SimError, SimState, Trace, DEFAULT_MAX_TIME};

use super::{ArrivalSpec, HalfCycle};

/// Longest trace excerpt stored in a counterexample.
pub const MAX_SLICE: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub message: String,
    pub trace: Vec<Event>,
}

impl Failure {
    pub fn new(message: impl Into<String>, events: &[Event]) -> Self {
        Failure {
            message: message.into(),
            trace: events[..events.len().min(MAX_SLICE)].to_vec(),
        }
    }
}

/// Finds the first net that toggles twice within a half-cycle, or an
/// AND/OR gate that sees more than one input move to its controlling
/// value within a half-cycle (the second one is never acknowledged).
/// `halves` are `[from, to)` index ranges into `events`. Transitions of
/// `ignore` (the environment's acknowledge inverter) are skipped.
pub fn find_non_monotonic(
    netlist: &Netlist,
    events: &[Event],
    halves: &[(usize, usize)],
    ignore: Option<NetId>,
) -> Option<Failure> {
    let mut net_count = vec![0u32; netlist.net_count()];
    let mut gate_count = vec![0u32; netlist.gates().len()];
    let mut dirty_nets = Vec::new();
    let mut dirty_gates = Vec::new();
    for &(from, to) in halves {
        let half = &events[from.min(events.len())..to.min(events.len())];
        for e in half {
            if Some(e.net) == ignore {
                continue;
            }
            let c = &mut net_count[e.net.index()];
            *c += 1;
            dirty_nets.push(e.net);
            if *c > 1 {
                return Some(Failure::new(
                    format!("{} toggled twice in one half-cycle (t={})", e.net, e.time),
                    half,
                ));
            }
            for &(g, _) in &netlist.net(e.net).fanout {
                let kind = netlist.gate(g).kind;
                if kind.controlling_value() != Some(e.level) {
                    continue;
                }
                let c = &mut gate_count[g.index()];
                *c += 1;
                dirty_gates.push(g);
                if *c > 1 {
                    return Some(Failure::new(
                        format!(
                            "{g} ({kind}) received {} controlling inputs in one half-cycle (t={})",
                            *c, e.time
                        ),
                        half,
                    ));
                }
            }
        }
        for n in dirty_nets.drain(..) {
            net_count[n.index()] = 0;
        }
        for g in dirty_gates.drain(..) {
            gate_count[g.index()] = 0;
        }
    }
    None
}

/// Every dual-rail port of the netlist and of its cell instances,
/// deduplicated by rail pair.
fn watched_ports(netlist: &Netlist) -> Vec<(String, NetId, NetId)> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let top = netlist.ports().map(|p| (p.name.clone(), p));
    let inner = netlist
        .instances()
        .iter()
        .flat_map(|c| c.ports.iter().map(move |p| (format!("{}.{}", c.name, p.name), p)));
    for (name, p) in top.chain(inner) {
        if seen.insert((p.rail1, p.rail0)) {
            out.push((name, p.rail1, p.rail0));
        }
    }
    out
}

/// Tracks every port through successive cycles and checks that each one
/// passes spacer, data, spacer exactly once per cycle and is never
/// ILLEGAL.
pub struct ConformanceTracker {
    protocol: Protocol,
    ports: Vec<(String, NetId, NetId)>,
    by_net: Vec<Vec<usize>>,
    levels: Vec<bool>,
    data_entries: Vec<u32>,
}

impl ConformanceTracker {
    pub fn new(netlist: &Netlist) -> Self {
        let ports = watched_ports(netlist);
        let mut by_net = vec![Vec::new(); netlist.net_count()];
        for (i, (_, r1, r0)) in ports.iter().enumerate() {
            by_net[r1.index()].push(i);
            by_net[r0.index()].push(i);
        }
        ConformanceTracker {
            protocol: netlist.protocol(),
            levels: (0..netlist.net_count())
                .map(|i| netlist.reset_level(NetId(i as u32)))
                .collect(),
            data_entries: vec![0; ports.len()],
            ports,
            by_net,
        }
    }

    fn value(&self, port: usize) -> DualRailValue {
        let (_, r1, r0) = &self.ports[port];
        decode((self.levels[r1.index()], self.levels[r0.index()]), self.protocol)
    }

    /// Feeds one cycle's events. `complete` requires every port to have
    /// carried exactly one data codeword.
    pub fn cycle(&mut self, events: &[Event], complete: bool) -> Result<(), Failure> {
        self.data_entries.iter_mut().for_each(|c| *c = 0);
        for e in events {
            let before: Vec<DualRailValue> =
                self.by_net[e.net.index()].iter().map(|&p| self.value(p)).collect();
            self.levels[e.net.index()] = e.level;
            for (k, &p) in self.by_net[e.net.index()].iter().enumerate() {
                let now = self.value(p);
                let name = &self.ports[p].0;
                if now == DualRailValue::Illegal {
                    return Err(Failure::new(
                        format!("port {name} decoded ILLEGAL at t={}", e.time),
                        events,
                    ));
                }
                if now.is_data() && !before[k].is_data() {
                    self.data_entries[p] += 1;
                    if self.data_entries[p] > 1 {
                        return Err(Failure::new(
                            format!("port {name} carried a second data codeword at t={}", e.time),
                            events,
                        ));
                    }
                }
            }
        }
        if complete {
            if let Some(p) = self.data_entries.iter().position(|&c| c != 1) {
                return Err(Failure::new(
                    format!("port {} carried {} data codewords in the cycle", self.ports[p].0, self.data_entries[p]),
                    events,
                ));
            }
        }
        Ok(())
    }

    /// All ports back at spacer.
    pub fn at_spacer(&self) -> Result<(), String> {
        match (0..self.ports.len()).find(|&p| self.value(p) != DualRailValue::Spacer) {
            Some(p) => Err(format!("port {} ended at {:?}", self.ports[p].0, self.value(p))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HandshakeChecks {
    pub results: bool,
    pub conformance: bool,
    pub monotonicity: bool,
}

/// Outcome of driving a handshake sequence.
#[derive(Debug, Default)]
pub struct HandshakeRun {
    pub reports: Vec<CycleReport>,
    /// First failure per property: results, conformance, monotonicity.
    pub results: Option<(usize, Failure)>,
    pub conformance: Option<(usize, Failure)>,
    pub monotonicity: Option<(usize, Failure)>,
}

impl HandshakeRun {
    pub fn first_failure(&self) -> Option<&(usize, Failure)> {
        [&self.results, &self.conformance, &self.monotonicity]
            .into_iter()
            .flatten()
            .min_by_key(|(cycle, _)| *cycle)
    }
}

/// Runs the sequence, comparing results with `expected` when it is
/// non-empty, and evaluates the requested trace properties per cycle.
/// Stops at the first harness error, which fails every property.
pub fn run_handshake(
    netlist: &Netlist,
    delay: &DelayModel,
    mode: EnvMode,
    operands: &[Vec<u64>],
    expected: &[u64],
    checks: HandshakeChecks,
) -> HandshakeRun {
    let mut run = HandshakeRun::default();
    let mut harness = match Harness::new(netlist, delay) {
        Ok(h) => h.with_mode(mode).retain_trace(false),
        Err(e) => {
            let f = Failure::new(e.to_string(), &[]);
            run.results = Some((0, f.clone()));
            run.conformance = Some((0, f.clone()));
            run.monotonicity = Some((0, f));
            return run;
        }
    };
    let mut tracker = checks.conformance.then(|| ConformanceTracker::new(netlist));
    for (i, ops) in operands.iter().enumerate() {
        let report = match harness.run_cycle(ops) {
            Ok(r) => r,
            Err(e) => {
                let f = Failure::new(format!("cycle {i}: {e}"), &harness.trace().events);
                run.results.get_or_insert((i, f.clone()));
                run.conformance.get_or_insert((i, f.clone()));
                run.monotonicity.get_or_insert((i, f));
                return run;
            }
        };
        let events = &harness.trace().events;
        if checks.results && run.results.is_none() {
            if let Some(&want) = expected.get(i) {
                if report.result != want {
                    run.results = Some((
                        i,
                        Failure::new(
                            format!("cycle {i}: operands {ops:?} gave {}, expected {want}", report.result),
                            events,
                        ),
                    ));
                }
            }
        }
        if let Some(t) = tracker.as_mut() {
            if run.conformance.is_none() {
                if let Err(mut f) = t.cycle(events, true) {
                    f.message = format!("cycle {i}: {}", f.message);
                    run.conformance = Some((i, f));
                }
            }
        }
        if checks.monotonicity && run.monotonicity.is_none() {
            let m = report.marks;
            if let Some(mut f) = find_non_monotonic(
                netlist,
                events,
                &[(m.data_start, m.spacer_start), (m.spacer_start, m.end)],
                netlist.ack_in(),
            ) {
                f.message = format!("cycle {i}: {}", f.message);
                run.monotonicity = Some((i, f));
            }
        }
        run.reports.push(report);
    }
    if let Err(e) = harness.finish() {
        let f = Failure::new(format!("after last cycle: {e}"), &harness.trace().events);
        run.results.get_or_insert((operands.len(), f));
    } else if let Some(t) = tracker.as_mut() {
        let tail = harness.trace().events.clone();
        let last = operands.len();
        let settled = t.cycle(&tail, false).map_err(|f| f.message).and_then(|_| t.at_spacer());
        if let Err(msg) = settled {
            run.conformance
                .get_or_insert((last, Failure::new(format!("after last cycle: {msg}"), &tail)));
        }
    }
    run
}

/// Result of an arrival-order experiment.
#[derive(Debug, Clone)]
pub struct ArrivalRun {
    pub trace: Trace,
    /// Time the last applied input of the data wave arrived.
    pub last_data: u64,
    /// Trace index where the spacer wave starts (end of trace if the run
    /// stopped after the data wave).
    pub spacer_mark: usize,
    pub last_spacer: Option<u64>,
    pub after_data: Vec<DualRailValue>,
    pub after_spacer: Option<Vec<DualRailValue>>,
}

fn read_outputs(sim: &SimState<'_>) -> Vec<DualRailValue> {
    sim.netlist().output_ports().iter().map(|p| sim.read_port(p)).collect()
}

/// Applies one input port at a time in `spec.order`, `spec.stagger`
/// apart, lets the circuit settle, then withdraws them in the same order.
/// The phase line moves with the first port of each wave. When the
/// netlist has a handshake the acknowledge input follows the completion
/// detector between the two waves.
pub fn run_arrival(netlist: &Netlist, spec: &ArrivalSpec) -> Result<ArrivalRun, SimError> {
    let mut sim = SimState::new(netlist, &spec.delay)?;
    let protocol = netlist.protocol();
    let ports = netlist.input_ports();
    let phase = netlist.phase();
    let withheld = |half: HalfCycle| spec.withhold.filter(|w| w.during == half).map(|w| w.port);

    let wave = |sim: &mut SimState<'_>, data: bool, skip: Option<usize>| -> Result<u64, SimError> {
        let mut last = sim.clock();
        let mut first = true;
        for &p in &spec.order {
            if Some(p) == skip {
                continue;
            }
            if !first && spec.stagger > 0 {
                sim.advance(spec.stagger)?;
            }
            let t = sim.clock();
            let (r1, r0) = if data {
                encode(spec.bits[p], protocol)
            } else {
                (protocol.spacer_level(), protocol.spacer_level())
            };
            sim.set_primary(ports[p].rail1, r1, t)?;
            sim.set_primary(ports[p].rail0, r0, t)?;
            if first {
                if let Some(ph) = phase {
                    let level = if data { protocol.data_phase_level() } else { protocol.spacer_level() };
                    sim.set_primary(ph, level, t)?;
                }
                first = false;
            }
            last = t;
        }
        sim.run_until_quiescent(DEFAULT_MAX_TIME)?;
        Ok(last)
    };

    let last_data = wave(&mut sim, true, withheld(HalfCycle::Data))?;
    let after_data = read_outputs(&sim);
    if withheld(HalfCycle::Data).is_some() {
        let spacer_mark = sim.trace().len();
        return Ok(ArrivalRun {
            trace: sim.take_trace(),
            last_data,
            spacer_mark,
            last_spacer: None,
            after_data,
            after_spacer: None,
        });
    }

    let handshake = netlist.ack_out().zip(netlist.ack_in());
    if let Some((ack_out, ack_in)) = handshake {
        let t = sim.clock();
        sim.set_primary(ack_in, !sim.level(ack_out), t)?;
        sim.run_until_quiescent(DEFAULT_MAX_TIME)?;
    }
    sim.advance(spec.stagger)?;
    let spacer_mark = sim.trace().len();
    let last_spacer = wave(&mut sim, false, withheld(HalfCycle::Spacer))?;
    let after_spacer = read_outputs(&sim);
    if let Some((ack_out, ack_in)) = handshake {
        let t = sim.clock();
        sim.set_primary(ack_in, !sim.level(ack_out), t)?;
        sim.run_until_quiescent(DEFAULT_MAX_TIME)?;
    }
    Ok(ArrivalRun {
        trace: sim.take_trace(),
        last_data,
        spacer_mark,
        last_spacer: Some(last_spacer),
        after_data,
        after_spacer: Some(after_spacer),
    })
}

/// Inputs applied together, circuit settled, outputs read. For cells
/// without a handshake.
pub fn evaluate_open_loop(
    netlist: &Netlist,
    delay: &DelayModel,
    bits: &[bool],
) -> Result<Vec<DualRailValue>, SimError> {
    let spec = ArrivalSpec {
        delay: delay.clone(),
        bits: bits.to_vec(),
        order: (0..bits.len()).collect(),
        stagger: 0,
        withhold: None,
    };
    run_arrival(netlist, &spec).map(|r| r.after_data)
}
