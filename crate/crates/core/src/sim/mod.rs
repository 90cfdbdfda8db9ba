//! Event-driven gate-level simulation with transport delays.
//!
//! Events are processed one time slot at a time. Every event in the slot
//! is applied first, then each gate that reads a changed net is evaluated
//! once, in gate-id order, and any output change is scheduled after that
//! gate's delay. A change is only scheduled when it differs from the last
//! value already scheduled on the net, so every applied event toggles its
//! net. C-elements use that projected value as their held state.

mod delay;
mod trace;

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use thiserror::Error;

pub use delay::{DelayModel, DEFAULT_RANDOM_RANGE};
pub use trace::{Cause, Event, Trace};

use crate::netlist::{decode, validate, Diagnostic, Driver, DualRailPort, DualRailValue, GateId, NetId, Netlist};

/// Default per-phase time budget before a run is declared oscillating.
pub const DEFAULT_MAX_TIME: u64 = 1_000_000;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("netlist failed validation: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error("NOT_PRIMARY: {0} is not driven by the environment")]
    NotPrimary(NetId),
    #[error("cannot schedule at t={at}, clock is already at {clock}")]
    TimeInPast { at: u64, clock: u64 },
    #[error("NON_QUIESCENT: still switching at t={time} (budget {budget})")]
    NonQuiescent { time: u64, budget: u64 },
    #[error("bad delay model: {0}")]
    BadDelay(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pending {
    time: u64,
    net: NetId,
    seq: u64,
    level: bool,
    cause: Cause,
}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.time, self.net, self.seq).cmp(&(other.time, other.net, other.seq))
    }
}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone)]
pub struct SimState<'a> {
    netlist: &'a Netlist,
    delays: Vec<u64>,
    levels: Vec<bool>,
    /// Last scheduled (or current, if nothing is pending) level per net.
    projected: Vec<bool>,
    queue: BinaryHeap<Reverse<Pending>>,
    seq: u64,
    clock: u64,
    trace: Trace,
    tracing: bool,
    applied: u64,
    touched: Vec<GateId>,
    marked: Vec<bool>,
}

impl<'a> SimState<'a> {
    /// Validates the netlist and puts every net at its reset level.
    pub fn new(netlist: &'a Netlist, model: &DelayModel) -> Result<Self, SimError> {
        let diagnostics = validate(netlist);
        if !diagnostics.is_empty() {
            return Err(SimError::Invalid(diagnostics));
        }
        let delays = model.delays(netlist)?;
        let mut state = SimState {
            netlist,
            delays,
            levels: Vec::new(),
            projected: Vec::new(),
            queue: BinaryHeap::new(),
            seq: 0,
            clock: 0,
            trace: Trace::default(),
            tracing: true,
            applied: 0,
            touched: Vec::new(),
            marked: vec![false; netlist.gates().len()],
        };
        state.reset();
        Ok(state)
    }

    /// Back to the reset state with an empty queue, clock and trace.
    pub fn reset(&mut self) {
        let n = self.netlist;
        self.levels = (0..n.net_count()).map(|i| n.reset_level(NetId(i as u32))).collect();
        self.projected = self.levels.clone();
        self.queue.clear();
        self.seq = 0;
        self.clock = 0;
        self.trace = Trace::default();
        self.applied = 0;
        self.touched.clear();
        self.marked.iter_mut().for_each(|m| *m = false);
    }

    pub fn netlist(&self) -> &'a Netlist {
        self.netlist
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn level(&self, net: NetId) -> bool {
        self.levels[net.index()]
    }

    pub fn levels(&self) -> &[bool] {
        &self.levels
    }

    pub fn gate_delay(&self, gate: GateId) -> u64 {
        self.delays[gate.index()]
    }

    pub fn max_gate_delay(&self) -> u64 {
        self.delays.iter().copied().max().unwrap_or(1)
    }

    pub fn is_quiescent(&self) -> bool {
        self.queue.is_empty()
    }

    /// Time of the next pending event.
    pub fn next_event_time(&self) -> Option<u64> {
        self.queue.peek().map(|Reverse(p)| p.time)
    }

    pub fn read_port(&self, port: &DualRailPort) -> DualRailValue {
        decode(
            (self.level(port.rail1), self.level(port.rail0)),
            self.netlist.protocol(),
        )
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn take_trace(&mut self) -> Trace {
        std::mem::take(&mut self.trace)
    }

    /// Turning tracing off keeps the event counter but drops the events.
    pub fn set_tracing(&mut self, on: bool) {
        self.tracing = on;
    }

    /// Events applied since reset, whether traced or not.
    pub fn events_applied(&self) -> u64 {
        self.applied
    }

    /// Schedules an environment transition. Does nothing if the net is
    /// already at (or already heading to) `level`.
    pub fn set_primary(&mut self, net: NetId, level: bool, at: u64) -> Result<(), SimError> {
        if !self.netlist.is_primary_input(net) {
            return Err(SimError::NotPrimary(net));
        }
        if at < self.clock {
            return Err(SimError::TimeInPast {
                at,
                clock: self.clock,
            });
        }
        self.schedule(net, level, at, Cause::Environment);
        Ok(())
    }

    fn schedule(&mut self, net: NetId, level: bool, time: u64, cause: Cause) {
        if self.projected[net.index()] == level {
            return;
        }
        self.projected[net.index()] = level;
        self.seq += 1;
        self.queue.push(Reverse(Pending {
            time,
            net,
            seq: self.seq,
            level,
            cause,
        }));
    }

    /// Processes one time slot. Returns its time, or `None` when idle.
    fn step(&mut self) -> Option<u64> {
        let time = self.next_event_time()?;
        self.clock = time;
        while let Some(Reverse(p)) = self.queue.peek().copied() {
            if p.time != time {
                break;
            }
            self.queue.pop();
            let slot = &mut self.levels[p.net.index()];
            debug_assert_ne!(*slot, p.level, "null transition on {}", p.net);
            if *slot == p.level {
                continue;
            }
            *slot = p.level;
            self.applied += 1;
            if self.tracing {
                self.trace.events.push(Event {
                    time,
                    net: p.net,
                    level: p.level,
                    cause: p.cause,
                });
            }
            for &(g, _) in &self.netlist.net(p.net).fanout {
                if !self.marked[g.index()] {
                    self.marked[g.index()] = true;
                    self.touched.push(g);
                }
            }
        }
        let mut touched = std::mem::take(&mut self.touched);
        touched.sort_unstable();
        for &g in &touched {
            self.marked[g.index()] = false;
            let gate = self.netlist.gate(g);
            let current = self.projected[gate.output.index()];
            let next = gate
                .kind
                .eval(gate.inputs.iter().map(|n| self.levels[n.index()]), current);
            if next != current {
                self.schedule(gate.output, next, time + self.delays[g.index()], Cause::Gate(g));
            }
        }
        touched.clear();
        self.touched = touched;
        Some(time)
    }

    fn check_budget(&self, deadline: u64, budget: u64) -> Result<(), SimError> {
        match self.next_event_time() {
            Some(t) if t > deadline => Err(SimError::NonQuiescent { time: t, budget }),
            _ => Ok(()),
        }
    }

    /// Runs until no events remain. Returns the time from the starting
    /// clock to the last applied event.
    pub fn run_until_quiescent(&mut self, max_time: u64) -> Result<u64, SimError> {
        let start = self.clock;
        let deadline = start.saturating_add(max_time);
        loop {
            self.check_budget(deadline, max_time)?;
            if self.step().is_none() {
                return Ok(self.clock - start);
            }
        }
    }

    /// Runs until `net` changes level and returns the time it did, or
    /// `None` if the circuit went quiet without it changing. The whole
    /// time slot containing the change is processed.
    pub fn run_until_change(&mut self, net: NetId, max_time: u64) -> Result<Option<u64>, SimError> {
        let deadline = self.clock.saturating_add(max_time);
        let before = self.level(net);
        loop {
            self.check_budget(deadline, max_time)?;
            match self.step() {
                None => return Ok(None),
                Some(t) if self.level(net) != before => return Ok(Some(t)),
                Some(_) => {}
            }
        }
    }

    /// Processes every event up to `clock + duration`, then moves the
    /// clock there.
    pub fn advance(&mut self, duration: u64) -> Result<(), SimError> {
        let target = self.clock.saturating_add(duration);
        while self.next_event_time().is_some_and(|t| t <= target) {
            self.step();
        }
        self.clock = target;
        Ok(())
    }

    /// Drives a primary net that is known to be environment-owned,
    /// skipping the driver lookup. Used by the harness on hot paths.
    pub(crate) fn drive(&mut self, net: NetId, level: bool, at: u64) {
        debug_assert!(matches!(
            self.netlist.net(net).driver,
            Some(Driver::Primary)
        ));
        self.schedule(net, level, at.max(self.clock), Cause::Environment);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{GateKind, Meta, NetlistBuilder, Rails};

    fn c_element() -> Netlist {
        let mut b = NetlistBuilder::new("c");
        let x = b.input("x");
        let y = b.input("y");
        let hi = b.c2(x.rail1, y.rail1);
        let lo = b.gate(GateKind::Buf, &[x.rail0]);
        b.output("z", Rails { rail1: hi, rail0: lo });
        b.finish(Meta::default())
    }

    fn rails(n: &Netlist, name: &str) -> Rails {
        n.ports().find(|p| p.name == name).unwrap().rails()
    }

    #[test]
    fn c2_fires_once_after_both_inputs() {
        let n = c_element();
        let model = DelayModel::FixedTable {
            table: [(GateKind::C2, 3), (GateKind::Buf, 1)].into(),
        };
        let mut s = SimState::new(&n, &model).unwrap();
        let (x, y, z) = (rails(&n, "x"), rails(&n, "y"), rails(&n, "z"));
        s.set_primary(x.rail1, true, 0).unwrap();
        s.run_until_quiescent(DEFAULT_MAX_TIME).unwrap();
        assert!(!s.level(z.rail1), "hold with inputs (1,0)");
        assert_eq!(s.trace().len(), 1);

        s.set_primary(y.rail1, true, 5).unwrap();
        s.run_until_quiescent(DEFAULT_MAX_TIME).unwrap();
        assert!(s.level(z.rail1));
        let rises: Vec<_> = s.trace().events.iter().filter(|e| e.net == z.rail1).collect();
        assert_eq!(rises.len(), 1);
        assert_eq!(rises[0].time, 8);
    }

    #[test]
    fn environment_events_and_null_transitions() {
        let n = c_element();
        let mut s = SimState::new(&n, &DelayModel::Unit).unwrap();
        let x = rails(&n, "x");
        s.set_primary(x.rail1, true, 5).unwrap();
        s.set_primary(x.rail1, true, 6).unwrap();
        s.set_primary(x.rail0, false, 2).unwrap();
        s.run_until_quiescent(DEFAULT_MAX_TIME).unwrap();
        assert_eq!(s.trace().len(), 1);
        assert_eq!(s.trace().events[0].time, 5);
        assert_eq!(s.trace().events[0].cause, Cause::Environment);
    }

    #[test]
    fn internal_nets_are_not_primary() {
        let n = c_element();
        let mut s = SimState::new(&n, &DelayModel::Unit).unwrap();
        let z = rails(&n, "z");
        assert_eq!(
            s.set_primary(z.rail1, true, 0),
            Err(SimError::NotPrimary(z.rail1))
        );
    }

    #[test]
    fn oscillator_trips_the_guard() {
        // en & fb -> NOT -> C2 with tied inputs -> fb: a ring once en rises.
        let mut b = NetlistBuilder::new("ring");
        let en = b.input("en");
        let fb = b.net();
        let x = b.gate(GateKind::And2, &[en.rail1, fb]);
        let nx = b.gate(GateKind::Not, &[x]);
        b.gate_driving(GateKind::C2, &[nx, nx], fb);
        let n = b.finish(Meta::default());
        let mut s = SimState::new(&n, &DelayModel::Unit).unwrap();
        s.set_primary(en.rail1, true, 0).unwrap();
        assert!(matches!(
            s.run_until_quiescent(1000),
            Err(SimError::NonQuiescent { budget: 1000, .. })
        ));
    }

    #[test]
    fn unvalidated_netlist_rejected() {
        let mut b = NetlistBuilder::new("bad");
        let floating = b.net();
        b.gate(GateKind::Buf, &[floating]);
        let n = b.finish(Meta::default());
        assert!(matches!(SimState::new(&n, &DelayModel::Unit), Err(SimError::Invalid(_))));
    }

    #[test]
    fn advance_moves_the_clock() {
        let n = c_element();
        let mut s = SimState::new(&n, &DelayModel::Unit).unwrap();
        let x = rails(&n, "x");
        s.set_primary(x.rail0, true, 3).unwrap();
        s.advance(2).unwrap();
        assert_eq!(s.clock(), 2);
        assert!(!s.level(x.rail0));
        s.advance(10).unwrap();
        assert_eq!(s.clock(), 12);
        assert!(s.level(rails(&n, "z").rail0));
        assert!(s.set_primary(x.rail0, false, 5).is_err());
    }

    #[test]
    fn trace_replay_reproduces_state() {
        let n = c_element();
        let mut s = SimState::new(&n, &DelayModel::random(3)).unwrap();
        let (x, y) = (rails(&n, "x"), rails(&n, "y"));
        s.set_primary(x.rail1, true, 0).unwrap();
        s.set_primary(y.rail1, true, 4).unwrap();
        s.run_until_quiescent(DEFAULT_MAX_TIME).unwrap();
        assert_eq!(s.trace().replay(&n), s.levels());
    }
}
