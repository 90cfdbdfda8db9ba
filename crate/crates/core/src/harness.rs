//! Four-phase handshake environment.
//!
//! The harness plays the role of the sender and receiver around one
//! circuit stage: it puts an operand codeword on the input ports, waits
//! for the completion detector, flips the acknowledge input through a
//! zero-delay inverter, returns the inputs to spacer and waits for the
//! detector to release.

use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netlist::{encode, DualRailPort, DualRailValue, NetId, Netlist, Protocol};
use crate::sim::{DelayModel, SimError, SimState, Trace, DEFAULT_MAX_TIME};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum HarnessError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("netlist has no ack_out/ack_in pair")]
    NoHandshake,
    #[error("ILLEGAL_OUTPUT: port {port} decoded ILLEGAL during {phase}")]
    IllegalOutput { port: String, phase: PhaseState },
    #[error("STUCK_PHASE: completion never changed during {phase}")]
    StuckPhase { phase: PhaseState },
    #[error("completion changed during {phase} while port {port} was {value:?}")]
    EarlyCompletion {
        port: String,
        phase: PhaseState,
        value: DualRailValue,
    },
    #[error("output port {port} changed after completion during {phase}")]
    LateOutput { port: String, phase: PhaseState },
    #[error("expected {expected} operands, got {got}")]
    OperandCount { expected: usize, got: usize },
    #[error("operand {value} does not fit bus {bus} of width {width}")]
    OperandRange { bus: String, value: u64, width: usize },
    #[error("cycle started in {0}, expected {first}", first = PhaseState::Ready)]
    PhaseOrder(PhaseState),
    #[error("EMPTY: no cycle reports")]
    Empty,
    #[error("cycle {index}: {source}")]
    Cycle {
        index: usize,
        #[source]
        source: Box<HarnessError>,
    },
}

/// The four handshake steps, named for RTZ. Under RTO the same steps
/// apply with every level complemented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseState {
    /// Step 1: inputs at spacer, acknowledge input at its idle level.
    Ready,
    /// Step 2: data applied, waiting for the completion detector.
    DataApplied,
    /// Step 3: completion seen, acknowledge flipped, spacer applied.
    SpacerApplied,
    /// Step 4: completion released, acknowledge restored.
    Released,
}

impl PhaseState {
    pub fn next(self) -> PhaseState {
        match self {
            PhaseState::Ready => PhaseState::DataApplied,
            PhaseState::DataApplied => PhaseState::SpacerApplied,
            PhaseState::SpacerApplied => PhaseState::Released,
            PhaseState::Released => PhaseState::Ready,
        }
    }
}

impl fmt::Display for PhaseState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PhaseState::Ready => "step 1 (ready)",
            PhaseState::DataApplied => "step 2 (data)",
            PhaseState::SpacerApplied => "step 3 (spacer)",
            PhaseState::Released => "step 4 (released)",
        })
    }
}

/// How the environment paces successive codewords.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvMode {
    /// Let the circuit go quiet after every acknowledge edge before
    /// applying the next codeword. Late output changes are reported.
    #[default]
    Settled,
    /// Apply the next codeword at the instant the acknowledge edge
    /// arrives, as a real sender would.
    Reactive,
}

/// Trace indices bounding the two half-cycles of one cycle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PhaseMarks {
    pub data_start: usize,
    pub spacer_start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleReport {
    pub cycle: usize,
    /// One value per input bus, in port order.
    pub operands: Vec<u64>,
    pub result: u64,
    pub forward: u64,
    pub reverse: u64,
    pub cycle_time: u64,
    pub transitions: u64,
    #[serde(skip)]
    pub marks: PhaseMarks,
}

/// Ports that share a name stem (`a[0]`, `a[1]`, ...) form one bus,
/// least significant bit first. A port without an index is a 1-bit bus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bus {
    pub name: String,
    pub ports: Vec<DualRailPort>,
}

impl Bus {
    pub fn width(&self) -> usize {
        self.ports.len()
    }
}

fn split_name(name: &str) -> (&str, usize) {
    match name.split_once('[') {
        Some((stem, rest)) => {
            let index = rest.trim_end_matches(']').parse().unwrap_or(0);
            (stem, index)
        }
        None => (name, 0),
    }
}

pub fn group_buses(ports: &[DualRailPort]) -> Vec<Bus> {
    let mut buses: Vec<(Bus, Vec<usize>)> = Vec::new();
    for p in ports {
        let (stem, index) = split_name(&p.name);
        match buses.iter_mut().find(|(b, _)| b.name == stem) {
            Some((bus, idx)) => {
                bus.ports.push(p.clone());
                idx.push(index);
            }
            None => buses.push((
                Bus {
                    name: stem.to_string(),
                    ports: vec![p.clone()],
                },
                vec![index],
            )),
        }
    }
    buses
        .into_iter()
        .map(|(mut bus, idx)| {
            let mut order: Vec<usize> = (0..idx.len()).collect();
            order.sort_by_key(|&i| idx[i]);
            bus.ports = order.into_iter().map(|i| bus.ports[i].clone()).collect();
            bus
        })
        .collect()
}

pub struct Harness<'a> {
    sim: SimState<'a>,
    mode: EnvMode,
    max_time: u64,
    phase: PhaseState,
    inputs: Vec<Bus>,
    outputs: Vec<Bus>,
    ack_out: NetId,
    ack_in: NetId,
    retain_trace: bool,
    cycles: usize,
}

impl<'a> Harness<'a> {
    pub fn new(netlist: &'a Netlist, model: &DelayModel) -> Result<Self, HarnessError> {
        let (Some(ack_out), Some(ack_in)) = (netlist.ack_out(), netlist.ack_in()) else {
            return Err(HarnessError::NoHandshake);
        };
        Ok(Harness {
            sim: SimState::new(netlist, model)?,
            mode: EnvMode::Settled,
            max_time: DEFAULT_MAX_TIME,
            phase: PhaseState::Ready,
            inputs: group_buses(netlist.input_ports()),
            outputs: group_buses(netlist.output_ports()),
            ack_out,
            ack_in,
            retain_trace: true,
            cycles: 0,
        })
    }

    pub fn with_mode(mut self, mode: EnvMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_max_time(mut self, max_time: u64) -> Self {
        self.max_time = max_time;
        self
    }

    /// When off, the trace only ever holds the most recent cycle, which
    /// keeps long runs at constant memory.
    pub fn retain_trace(mut self, on: bool) -> Self {
        self.retain_trace = on;
        self
    }

    pub fn sim(&self) -> &SimState<'a> {
        &self.sim
    }

    pub fn trace(&self) -> &Trace {
        self.sim.trace()
    }

    pub fn phase(&self) -> PhaseState {
        self.phase
    }

    pub fn input_buses(&self) -> &[Bus] {
        &self.inputs
    }

    pub fn output_buses(&self) -> &[Bus] {
        &self.outputs
    }

    fn protocol(&self) -> Protocol {
        self.sim.netlist().protocol()
    }

    fn advance_phase(&mut self, to: PhaseState) {
        debug_assert_eq!(self.phase.next(), to);
        self.phase = to;
    }

    fn apply_codeword(&mut self, operands: Option<&[u64]>, at: u64) {
        let protocol = self.protocol();
        let spacer = protocol.spacer_level();
        for (b, bus) in self.inputs.iter().enumerate() {
            for (bit, port) in bus.ports.iter().enumerate() {
                let (r1, r0) = match operands {
                    Some(ops) => encode((ops[b] >> bit) & 1 == 1, protocol),
                    None => (spacer, spacer),
                };
                self.sim.drive(port.rail1, r1, at);
                self.sim.drive(port.rail0, r0, at);
            }
        }
        if let Some(phase) = self.sim.netlist().phase() {
            let level = if operands.is_some() {
                protocol.data_phase_level()
            } else {
                spacer
            };
            self.sim.drive(phase, level, at);
        }
    }

    fn check_outputs(&self, want_data: bool) -> Result<(), HarnessError> {
        for port in self.outputs.iter().flat_map(|b| &b.ports) {
            let value = self.sim.read_port(port);
            if value == DualRailValue::Illegal {
                return Err(HarnessError::IllegalOutput {
                    port: port.name.clone(),
                    phase: self.phase,
                });
            }
            if value.is_data() != want_data {
                return Err(HarnessError::EarlyCompletion {
                    port: port.name.clone(),
                    phase: self.phase,
                    value,
                });
            }
        }
        Ok(())
    }

    fn check_no_late_outputs(&self, since: usize) -> Result<(), HarnessError> {
        let events = &self.sim.trace().events;
        for port in self.outputs.iter().flat_map(|b| &b.ports) {
            if events[since.min(events.len())..]
                .iter()
                .any(|e| e.net == port.rail1 || e.net == port.rail0)
            {
                return Err(HarnessError::LateOutput {
                    port: port.name.clone(),
                    phase: self.phase,
                });
            }
        }
        Ok(())
    }

    fn output_value(&self) -> u64 {
        self.outputs.first().map_or(0, |bus| {
            bus.ports.iter().enumerate().fold(0u64, |acc, (bit, port)| {
                match self.sim.read_port(port).bit() {
                    Some(true) => acc | (1 << bit),
                    _ => acc,
                }
            })
        })
    }

    fn check_operands(&self, operands: &[u64]) -> Result<(), HarnessError> {
        if operands.len() != self.inputs.len() {
            return Err(HarnessError::OperandCount {
                expected: self.inputs.len(),
                got: operands.len(),
            });
        }
        for (bus, &value) in self.inputs.iter().zip(operands) {
            if bus.width() < 64 && value >> bus.width() != 0 {
                return Err(HarnessError::OperandRange {
                    bus: bus.name.clone(),
                    value,
                    width: bus.width(),
                });
            }
        }
        Ok(())
    }

    /// Waits for the completion detector to toggle. The inverter that
    /// feeds it back to `ack_in` has no delay.
    fn await_ack(&mut self) -> Result<u64, HarnessError> {
        let t = self
            .sim
            .run_until_change(self.ack_out, self.max_time)?
            .ok_or(HarnessError::StuckPhase { phase: self.phase })?;
        let level = !self.sim.level(self.ack_out);
        self.sim.drive(self.ack_in, level, t);
        Ok(t)
    }

    fn settle(&mut self, ack_index: usize) -> Result<(), HarnessError> {
        if self.mode == EnvMode::Settled {
            self.sim.run_until_quiescent(self.max_time)?;
            self.check_no_late_outputs(ack_index)?;
        }
        Ok(())
    }

    /// One data/spacer transaction. Operands are given per input bus.
    pub fn run_cycle(&mut self, operands: &[u64]) -> Result<CycleReport, HarnessError> {
        if self.phase != PhaseState::Ready {
            return Err(HarnessError::PhaseOrder(self.phase));
        }
        self.check_operands(operands)?;
        if !self.retain_trace {
            self.sim.take_trace();
        }
        let events_before = self.sim.events_applied();
        let data_start = self.sim.trace().len();

        let t_data = self.sim.clock();
        self.apply_codeword(Some(operands), t_data);
        self.advance_phase(PhaseState::DataApplied);
        let t_ack = self.await_ack()?;
        self.check_outputs(true)?;
        let result = self.output_value();
        let spacer_start = self.sim.trace().len();
        self.settle(spacer_start)?;

        let t_spacer = self.sim.clock();
        self.apply_codeword(None, t_spacer);
        self.advance_phase(PhaseState::SpacerApplied);
        let t_release = self.await_ack()?;
        self.check_outputs(false)?;
        let release_index = self.sim.trace().len();
        self.advance_phase(PhaseState::Released);
        self.settle(release_index)?;
        self.advance_phase(PhaseState::Ready);

        let forward = t_ack - t_data;
        let reverse = t_release - t_spacer;
        let report = CycleReport {
            cycle: self.cycles,
            operands: operands.to_vec(),
            result,
            forward,
            reverse,
            cycle_time: forward + reverse,
            transitions: self.sim.events_applied() - events_before,
            marks: PhaseMarks {
                data_start,
                spacer_start,
                end: self.sim.trace().len(),
            },
        };
        self.cycles += 1;
        Ok(report)
    }

    pub fn run_sequence<I, O>(&mut self, operands: I) -> Result<Vec<CycleReport>, HarnessError>
    where
        I: IntoIterator<Item = O>,
        O: AsRef<[u64]>,
    {
        operands
            .into_iter()
            .enumerate()
            .map(|(index, ops)| {
                self.run_cycle(ops.as_ref())
                    .map_err(|e| HarnessError::Cycle {
                        index,
                        source: Box::new(e),
                    })
            })
            .collect()
    }

    /// Drains any pending events and reports whether every net is back
    /// at its reset level.
    pub fn finish(&mut self) -> Result<bool, HarnessError> {
        self.sim.run_until_quiescent(self.max_time)?;
        let n = self.sim.netlist();
        Ok((0..n.net_count()).all(|i| {
            let net = NetId(i as u32);
            self.sim.level(net) == n.reset_level(net)
        }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub min: u64,
    pub max: u64,
    pub mean: f64,
}

impl Stats {
    pub fn of(values: impl IntoIterator<Item = u64>) -> Option<Stats> {
        let mut count = 0u64;
        let mut sum = 0u128;
        let mut min = u64::MAX;
        let mut max = 0;
        for v in values {
            count += 1;
            sum += v as u128;
            min = min.min(v);
            max = max.max(v);
        }
        (count > 0).then(|| Stats {
            min,
            max,
            mean: sum as f64 / count as f64,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub cycles: usize,
    pub forward: Stats,
    pub reverse: Stats,
    pub cycle_time: Stats,
    /// Forward latency equalled reverse latency on every cycle.
    pub forward_equals_reverse: bool,
}

pub fn measure_latencies(reports: &[CycleReport]) -> Result<LatencySummary, HarnessError> {
    let stats = |f: fn(&CycleReport) -> u64| Stats::of(reports.iter().map(f)).ok_or(HarnessError::Empty);
    Ok(LatencySummary {
        cycles: reports.len(),
        forward: stats(|r| r.forward)?,
        reverse: stats(|r| r.reverse)?,
        cycle_time: stats(|r| r.cycle_time)?,
        forward_equals_reverse: reports.iter().all(|r| r.forward == r.reverse),
    })
}

/// CSV with one column per input bus, then
/// `product,forward,reverse,cycle,transitions`.
pub fn write_reports_csv<W: Write>(
    mut w: W,
    bus_names: &[String],
    reports: &[CycleReport],
) -> io::Result<()> {
    let mut header: Vec<&str> = bus_names.iter().map(String::as_str).collect();
    header.extend(["product", "forward", "reverse", "cycle", "transitions"]);
    writeln!(w, "{}", header.join(","))?;
    for r in reports {
        for op in &r.operands {
            write!(w, "{op},")?;
        }
        writeln!(
            w,
            "{},{},{},{},{}",
            r.result, r.forward, r.reverse, r.cycle_time, r.transitions
        )?;
    }
    Ok(())
}

pub fn reports_to_json(reports: &[CycleReport]) -> serde_json::Result<String> {
    serde_json::to_string_pretty(reports)
}
