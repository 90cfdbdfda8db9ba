//! Library-independent design metrics: latency, transistor-count area,
//! transition-count power and the normalized power-cycle-time product.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::{measure_latencies, CycleReport, EnvMode, Stats};
use crate::multiplier::{generate, MultiplierSpec};
use crate::netlist::{GateKind, Netlist, Protocol};
use crate::sim::DelayModel;
use crate::verify::{operand_list, run_handshake, Coverage, HandshakeChecks};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MetricsError {
    #[error("MISSING_AREA_ENTRY: no transistor count for {0}")]
    MissingAreaEntry(GateKind),
    #[error("transistor count for {0} must be positive")]
    ZeroArea(GateKind),
    #[error("EMPTY: nothing to aggregate")]
    Empty,
    #[error("GROUP_MISMATCH: {0}")]
    GroupMismatch(String),
    #[error("{design}: {message}")]
    Design { design: String, message: String },
}

/// Transistor count per gate kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AreaTable(BTreeMap<GateKind, u64>);

impl Default for AreaTable {
    /// C2 is the 12-transistor AO222-with-feedback realisation; the rest
    /// are static CMOS textbook counts.
    fn default() -> Self {
        AreaTable(BTreeMap::from([
            (GateKind::C2, 12),
            (GateKind::C3, 16),
            (GateKind::And2, 6),
            (GateKind::Or2, 6),
            (GateKind::And3, 8),
            (GateKind::Or3, 8),
            (GateKind::And4, 10),
            (GateKind::Or4, 10),
            (GateKind::Not, 2),
            (GateKind::Buf, 4),
        ]))
    }
}

impl AreaTable {
    pub fn new(entries: BTreeMap<GateKind, u64>) -> Result<Self, MetricsError> {
        match entries.iter().find(|(_, &v)| v == 0) {
            Some((&k, _)) => Err(MetricsError::ZeroArea(k)),
            None => Ok(AreaTable(entries)),
        }
    }

    /// Default table with `overrides` applied on top.
    pub fn with_overrides(overrides: BTreeMap<GateKind, u64>) -> Result<Self, MetricsError> {
        let mut entries = AreaTable::default().0;
        entries.extend(overrides);
        AreaTable::new(entries)
    }

    pub fn get(&self, kind: GateKind) -> Option<u64> {
        self.0.get(&kind).copied()
    }

    pub fn entries(&self) -> &BTreeMap<GateKind, u64> {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AreaReport {
    pub transistors: u64,
    pub census: BTreeMap<GateKind, usize>,
}

pub fn area(netlist: &Netlist, table: &AreaTable) -> Result<AreaReport, MetricsError> {
    let census = netlist.census();
    let mut transistors = 0;
    for (&kind, &count) in &census {
        let each = table.get(kind).ok_or(MetricsError::MissingAreaEntry(kind))?;
        transistors += each * count as u64;
    }
    Ok(AreaReport {
        transistors,
        census,
    })
}

/// Mean transitions per cycle.
pub fn power_proxy(reports: &[CycleReport]) -> Result<f64, MetricsError> {
    Stats::of(reports.iter().map(|r| r.transitions))
        .map(|s| s.mean)
        .ok_or(MetricsError::Empty)
}

/// Divides each value by the largest; the largest becomes exactly 1.0.
pub fn pctp_normalize(values: &[f64]) -> Result<Vec<f64>, MetricsError> {
    let max = values.iter().copied().fold(f64::NAN, f64::max);
    if values.is_empty() || !(max > 0.0) {
        return Err(MetricsError::Empty);
    }
    Ok(values.iter().map(|v| v / max).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub design: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<MultiplierSpec>,
    pub delay_model: String,
    pub cycles: usize,
    pub forward: Stats,
    pub reverse: Stats,
    pub cycle_time: Stats,
    pub forward_equals_reverse: bool,
    pub area: AreaReport,
    pub power_proxy: f64,
    pub pctp: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pctp_normalized: Option<f64>,
}

impl MetricsReport {
    pub fn build(
        netlist: &Netlist,
        delay: &DelayModel,
        reports: &[CycleReport],
        table: &AreaTable,
    ) -> Result<Self, MetricsError> {
        let lat = measure_latencies(reports).map_err(|_| MetricsError::Empty)?;
        let power = power_proxy(reports)?;
        Ok(MetricsReport {
            design: netlist.name().to_string(),
            spec: netlist.meta().generator,
            delay_model: delay.to_string(),
            cycles: lat.cycles,
            forward: lat.forward,
            reverse: lat.reverse,
            cycle_time: lat.cycle_time,
            forward_equals_reverse: lat.forward_equals_reverse,
            area: area(netlist, table)?,
            power_proxy: power,
            pctp: power * lat.cycle_time.mean,
            pctp_normalized: None,
        })
    }

    fn size(&self) -> Option<usize> {
        self.spec.map(|s| s.n)
    }

    fn protocol(&self) -> Option<Protocol> {
        self.spec.map(|s| s.protocol)
    }
}

/// Designs of one multiplication size, ranked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub n: Option<usize>,
    pub delay_model: String,
    /// Sorted by mean cycle time, then PCTP, then name.
    pub rows: Vec<MetricsReport>,
    pub winner: String,
}

/// Ranks designs of one size and fills in normalized PCTP, normalizing
/// separately per protocol.
pub fn compare(mut designs: Vec<MetricsReport>) -> Result<Comparison, MetricsError> {
    let first = designs.first().ok_or(MetricsError::Empty)?;
    let (n, delay) = (first.size(), first.delay_model.clone());
    if let Some(d) = designs.iter().find(|d| d.size() != n) {
        return Err(MetricsError::GroupMismatch(format!(
            "{} has size {:?}, group has {:?}",
            d.design,
            d.size(),
            n
        )));
    }
    if let Some(d) = designs.iter().find(|d| d.delay_model != delay) {
        return Err(MetricsError::GroupMismatch(format!(
            "{} ran under {}, group under {delay}",
            d.design, d.delay_model
        )));
    }
    let mut by_protocol: BTreeMap<Option<Protocol>, Vec<usize>> = BTreeMap::new();
    for (i, d) in designs.iter().enumerate() {
        by_protocol.entry(d.protocol()).or_default().push(i);
    }
    for members in by_protocol.values() {
        let values: Vec<f64> = members.iter().map(|&i| designs[i].pctp).collect();
        for (&i, v) in members.iter().zip(pctp_normalize(&values)?) {
            designs[i].pctp_normalized = Some(v);
        }
    }
    designs.sort_by(|a, b| {
        a.cycle_time
            .mean
            .total_cmp(&b.cycle_time.mean)
            .then(a.pctp.total_cmp(&b.pctp))
            .then_with(|| a.design.cmp(&b.design))
    });
    Ok(Comparison {
        n,
        delay_model: delay,
        winner: designs[0].design.clone(),
        rows: designs,
    })
}

/// Operand workload for a bench run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Workload {
    pub coverage: Coverage,
}

impl Workload {
    /// Exhaustive up to 4×4, otherwise 10,000 seeded random pairs.
    pub fn default_for(n: usize, seed: u64) -> Self {
        Workload {
            coverage: if n <= 4 {
                Coverage::Exhaustive
            } else {
                Coverage::Random {
                    count: 10_000,
                    seed,
                }
            },
        }
    }
}

/// Generates and simulates one design. Failures are reported per design.
pub fn measure_design(
    spec: &MultiplierSpec,
    delay: &DelayModel,
    workload: &Workload,
    table: &AreaTable,
) -> Result<MetricsReport, MetricsError> {
    let err = |message: String| MetricsError::Design {
        design: spec.name(),
        message,
    };
    let netlist = generate(spec).map_err(|e| err(e.to_string()))?;
    let operands = operand_list(&[spec.n, spec.n], &workload.coverage)
        .ok_or_else(|| err("operand space too large for exhaustive coverage".into()))?;
    let run = run_handshake(
        &netlist,
        delay,
        EnvMode::Settled,
        &operands,
        &[],
        HandshakeChecks::default(),
    );
    if let Some((cycle, f)) = run.first_failure() {
        return Err(err(format!("cycle {cycle}: {}", f.message)));
    }
    MetricsReport::build(&netlist, delay, &run.reports, table)
}

/// The bench grid: every design measured, grouped by size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchTable {
    pub area_table: AreaTable,
    pub groups: Vec<Comparison>,
    /// Designs that failed to simulate, with the reason.
    pub failures: Vec<(String, String)>,
}

pub fn run_bench(
    specs: &[MultiplierSpec],
    delay: &DelayModel,
    seed: u64,
    table: &AreaTable,
) -> BenchTable {
    let measured: Vec<(MultiplierSpec, Result<MetricsReport, MetricsError>)> = specs
        .par_iter()
        .map(|s| (*s, measure_design(s, delay, &Workload::default_for(s.n, seed), table)))
        .collect();
    let mut by_size: BTreeMap<usize, Vec<MetricsReport>> = BTreeMap::new();
    let mut failures = Vec::new();
    for (spec, result) in measured {
        match result {
            Ok(r) => by_size.entry(spec.n).or_default().push(r),
            Err(e) => failures.push((spec.name(), e.to_string())),
        }
    }
    let mut groups = Vec::new();
    for (n, designs) in by_size {
        match compare(designs) {
            Ok(c) => groups.push(c),
            Err(e) => failures.push((format!("{n}x{n}"), e.to_string())),
        }
    }
    BenchTable {
        area_table: table.clone(),
        groups,
        failures,
    }
}

fn fa_label(r: &MetricsReport) -> String {
    match r.spec {
        Some(s) => format!("{}-FA", s.fa_kind.name().to_uppercase()),
        None => r.design.clone(),
    }
}

impl BenchTable {
    /// Human-readable layout: one block per size and protocol, one row per
    /// design, with the fastest design of each block marked `*`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for g in &self.groups {
            let size = g.n.map_or("?".to_string(), |n| format!("{n}x{n}"));
            let mut protocols: Vec<Option<Protocol>> = g.rows.iter().map(|r| r.protocol()).collect();
            protocols.sort();
            protocols.dedup();
            for p in protocols {
                let label = p.map_or("unknown", |p| p.name()).to_uppercase();
                let _ = writeln!(out, "{size} ({label} handshaking, delays {})", g.delay_model);
                let _ = writeln!(
                    out,
                    "  {:<28} {:>12} {:>10} {:>12} {:>12} {:>11}",
                    "design", "cycle (u)", "fwd=rev", "area (T)", "power (tr)", "PCTP (norm)"
                );
                // Rows are already ranked, so the first of a block is fastest.
                for (i, r) in g.rows.iter().filter(|r| r.protocol() == p).enumerate() {
                    let mark = if i == 0 { "*" } else { " " };
                    let _ = writeln!(
                        out,
                        "{mark} {:<28} {:>12.3} {:>10} {:>12} {:>12.3} {:>11.3}",
                        format!("{} ({})", fa_label(r), r.design),
                        r.cycle_time.mean,
                        if r.forward_equals_reverse { "yes" } else { "no" },
                        r.area.transistors,
                        r.power_proxy,
                        r.pctp_normalized.unwrap_or(f64::NAN),
                    );
                }
                out.push('\n');
            }
        }
        let entries: Vec<String> = self
            .area_table
            .entries()
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        let _ = writeln!(out, "area table (transistors): {}", entries.join(" "));
        let _ = writeln!(out, "times are abstract delay units; power is transitions per cycle");
        for (design, reason) in &self.failures {
            let _ = writeln!(out, "FAILED {design}: {reason}");
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "n,protocol,fa_kind,design,cycles,forward_mean,reverse_mean,cycle_mean,cycle_min,cycle_max,forward_equals_reverse,area,power_proxy,pctp,pctp_normalized\n",
        );
        for g in &self.groups {
            for r in &g.rows {
                let (n, p, k) = match r.spec {
                    Some(s) => (s.n.to_string(), s.protocol.name().to_string(), s.fa_kind.name().to_string()),
                    None => Default::default(),
                };
                let _ = writeln!(
                    out,
                    "{n},{p},{k},{},{},{},{},{},{},{},{},{},{},{},{}",
                    r.design,
                    r.cycles,
                    r.forward.mean,
                    r.reverse.mean,
                    r.cycle_time.mean,
                    r.cycle_time.min,
                    r.cycle_time.max,
                    r.forward_equals_reverse,
                    r.area.transistors,
                    r.power_proxy,
                    r.pctp,
                    r.pctp_normalized.map_or(String::new(), |v| v.to_string()),
                );
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cells::{make_and2_strong, FullAdderKind};
    use crate::netlist::{dualize, Meta, NetlistBuilder};

    #[test]
    fn single_c_element_is_twelve() {
        let mut b = NetlistBuilder::new("c");
        let x = b.input("x");
        b.c2(x.rail1, x.rail0);
        let n = b.finish(Meta::default());
        assert_eq!(area(&n, &AreaTable::default()).unwrap().transistors, 12);
    }

    #[test]
    fn and_cell_area() {
        let cell = make_and2_strong(Protocol::Rtz).netlist;
        // Four C2 minterms and one OR3.
        assert_eq!(area(&cell, &AreaTable::default()).unwrap().transistors, 4 * 12 + 8);
        assert_eq!(area(&dualize(&cell), &AreaTable::default()).unwrap().transistors, 56);
    }

    #[test]
    fn empty_netlist_and_missing_entries() {
        let empty = NetlistBuilder::new("e").finish(Meta::default());
        assert_eq!(area(&empty, &AreaTable::default()).unwrap().transistors, 0);
        let only_c2 = AreaTable::new(BTreeMap::from([(GateKind::C2, 12)])).unwrap();
        let cell = make_and2_strong(Protocol::Rtz).netlist;
        assert_eq!(area(&cell, &only_c2), Err(MetricsError::MissingAreaEntry(GateKind::Or3)));
        assert!(AreaTable::new(BTreeMap::from([(GateKind::C2, 0)])).is_err());
    }

    #[test]
    fn normalization() {
        assert_eq!(pctp_normalize(&[10.0, 7.36]).unwrap(), [1.0, 0.736]);
        assert_eq!(pctp_normalize(&[3.0]).unwrap(), [1.0]);
        assert_eq!(pctp_normalize(&[2.0, 2.0]).unwrap(), [1.0, 1.0]);
        assert_eq!(pctp_normalize(&[]), Err(MetricsError::Empty));
    }

    #[test]
    fn normalized_column_of_published_table() {
        // 4x4 RTZ block: cycle time (ns), power (uW), printed PCTP column.
        let rows = [
            (7.26, 1245.0, 1.0),
            (5.42, 1228.0, 0.736),
            (5.32, 1207.0, 0.710),
            (5.20, 1222.0, 0.703),
            (5.18, 1216.0, 0.697),
            (3.90, 1222.0, 0.527),
            (4.48, 1217.0, 0.603),
        ];
        let pctp: Vec<f64> = rows.iter().map(|r| r.0 * r.1).collect();
        for (v, r) in pctp_normalize(&pctp).unwrap().iter().zip(rows) {
            assert!((v - r.2).abs() < 5e-4, "{v} vs {}", r.2);
        }
    }

    #[test]
    fn power_of_one_cycle() {
        let r = CycleReport {
            cycle: 0,
            operands: vec![],
            result: 0,
            forward: 1,
            reverse: 1,
            cycle_time: 2,
            transitions: 100,
            marks: Default::default(),
        };
        assert_eq!(power_proxy(&[r]).unwrap(), 100.0);
        assert_eq!(power_proxy(&[]), Err(MetricsError::Empty));
    }

    #[test]
    fn compare_ranks_and_rejects_mixed_sizes() {
        let table = AreaTable::default();
        let m = |n, k, p| {
            let spec = MultiplierSpec::new(n, k, p);
            let w = Workload {
                coverage: Coverage::Random { count: 20, seed: 1 },
            };
            measure_design(&spec, &DelayModel::Unit, &w, &table).unwrap()
        };
        let c = compare(vec![
            m(4, FullAdderKind::Dims, Protocol::Rtz),
            m(4, FullAdderKind::Weak, Protocol::Rtz),
        ])
        .unwrap();
        assert_eq!(c.winner, "mul4x4_weak_rtz");
        assert_eq!(c.rows.iter().filter(|r| r.pctp_normalized == Some(1.0)).count(), 1);
        let mixed = compare(vec![
            m(2, FullAdderKind::Dims, Protocol::Rtz),
            m(4, FullAdderKind::Dims, Protocol::Rtz),
        ]);
        assert!(matches!(mixed, Err(MetricsError::GroupMismatch(_))));

        let same = m(2, FullAdderKind::Dims, Protocol::Rtz);
        let mut twin = same.clone();
        twin.design = "a_twin".into();
        let c = compare(vec![same, twin]).unwrap();
        assert_eq!(c.rows[0].design, "a_twin");
    }
}
