use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::netlist::{GateId, NetId, Netlist};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cause {
    Gate(GateId),
    Environment,
}

impl fmt::Display for Cause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cause::Gate(g) => write!(f, "{g}"),
            Cause::Environment => f.write_str("env"),
        }
    }
}

/// One applied net transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub time: u64,
    pub net: NetId,
    pub level: bool,
    pub cause: Cause,
}

/// Applied events in the order the simulator processed them.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub events: Vec<Event>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn slice(&self, from: usize, to: usize) -> &[Event] {
        &self.events[from.min(self.events.len())..to.min(self.events.len())]
    }

    /// Net levels obtained by applying every event to the reset state.
    pub fn replay(&self, netlist: &Netlist) -> Vec<bool> {
        let mut levels: Vec<bool> = (0..netlist.net_count())
            .map(|i| netlist.reset_level(NetId(i as u32)))
            .collect();
        for e in &self.events {
            levels[e.net.index()] = e.level;
        }
        levels
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "time,net,level,cause")?;
        for e in &self.events {
            writeln!(w, "{},{},{},{}", e.time, e.net.0, e.level as u8, e.cause)?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }

    /// Waveform dump. Port rails are named `<port>.t` / `<port>.f`, the
    /// handshake nets `ack_out`, `ack_in` and `phase`, everything else
    /// `n<id>`.
    pub fn write_vcd<W: Write>(&self, netlist: &Netlist, w: W) -> io::Result<()> {
        self.write_vcd_with_comment(netlist, None, w)
    }

    /// As [`Trace::write_vcd`], with a `$comment` block ahead of the
    /// definitions.
    pub fn write_vcd_with_comment<W: Write>(&self, netlist: &Netlist, comment: Option<&str>, w: W) -> io::Result<()> {
        let mut names: Vec<String> = (0..netlist.net_count()).map(|i| format!("n{i}")).collect();
        for p in netlist.ports() {
            names[p.rail1.index()] = format!("{}.t", p.name);
            names[p.rail0.index()] = format!("{}.f", p.name);
        }
        for (net, name) in [
            (netlist.ack_out(), "ack_out"),
            (netlist.ack_in(), "ack_in"),
            (netlist.phase(), "phase"),
        ] {
            if let Some(n) = net {
                names[n.index()] = name.to_string();
            }
        }

        let mut vcd = vcd::Writer::new(w);
        if let Some(c) = comment {
            vcd.comment(c)?;
        }
        vcd.timescale(1, vcd::TimescaleUnit::NS)?;
        let module: String = netlist
            .name()
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
            .collect();
        vcd.add_module(if module.is_empty() { "top" } else { &module })?;
        let ids = names
            .iter()
            .map(|n| vcd.add_wire(1, n))
            .collect::<io::Result<Vec<_>>>()?;
        vcd.upscope()?;
        vcd.enddefinitions()?;

        vcd.begin(vcd::SimulationCommand::Dumpvars)?;
        for (i, id) in ids.iter().enumerate() {
            vcd.change_scalar(*id, netlist.reset_level(NetId(i as u32)))?;
        }
        vcd.end()?;

        let mut last = None;
        for e in &self.events {
            if last != Some(e.time) {
                vcd.timestamp(e.time)?;
                last = Some(e.time);
            }
            vcd.change_scalar(ids[e.net.index()], e.level)?;
        }
        vcd.flush()
    }
}
