use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use qdi_core::harness::{group_buses, measure_latencies, reports_to_json, write_reports_csv, Harness};
use qdi_core::metrics::{power_proxy, run_bench, BenchTable};
use qdi_core::multiplier::critical_path;
use qdi_core::netlist::serial;
use qdi_core::sim::DEFAULT_RANDOM_RANGE;
use qdi_core::verify::{
    check_delay_insensitivity, check_functional, check_handshake_suite, check_rtz_rto_duality,
    check_strong_indication, check_weak_indication, controls, operand_list, product_oracle, replay,
    CheckKind, CheckOutcome, Counterexample,
};
use qdi_core::{generate, structure_stats, DelayModel, FullAdderKind, MultiplierSpec, Netlist, Protocol, VERSION};

use crate::config::{CommandKind, RunConfig};

/// Whether the properties a command checks held.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
}

pub struct Output {
    pub text: String,
    pub json: Value,
    pub status: Status,
}

/// JSON envelope shared by every artifact.
#[derive(Serialize)]
struct Artifact<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

fn provenance(config: &RunConfig) -> Value {
    json!({"tool": "qdi", "version": VERSION, "config": config})
}

fn header_line(config: &RunConfig) -> String {
    format!("# qdi {VERSION} config={}\n", serde_json::to_string(config).expect("config serializes"))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: Serialize>(config: &RunConfig, name: &str, body: T) -> Result<PathBuf> {
    let artifact = Artifact {
        tool: "qdi",
        version: VERSION,
        config,
        body,
    };
    let mut text = serde_json::to_string_pretty(&artifact)?;
    text.push('\n');
    let path = config.out.join(name);
    write_file(&path, text.as_bytes())?;
    Ok(path)
}

fn mutate(netlist: &Netlist, how: &str) -> Result<Netlist> {
    if let Some(inst) = how.strip_prefix("swap:") {
        return Ok(controls::swap_sum_cout(netlist, inst)?);
    }
    if let Some(n) = how.strip_prefix("fork:") {
        let buffers = n.parse().with_context(|| format!("bad buffer count in `{how}`"))?;
        return Ok(controls::delayed_fork(netlist, buffers)?);
    }
    bail!("unknown mutation `{how}` (expected swap:<instance> or fork:<buffers>)")
}

/// The netlist a config describes: a file if one is named, otherwise a
/// generated multiplier, mutated if requested.
pub fn design(config: &RunConfig) -> Result<Netlist> {
    let netlist = match &config.netlist {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading netlist {}", path.display()))?;
            serial::deserialize(&text).with_context(|| format!("loading netlist {}", path.display()))?
        }
        None => generate(&config.spec())?,
    };
    match &config.mutate {
        Some(how) => mutate(&netlist, how),
        None => Ok(netlist),
    }
}

pub fn run(config: &RunConfig) -> Result<Output> {
    match config.command {
        CommandKind::Gen => gen(config),
        CommandKind::Sim => sim(config),
        CommandKind::Verify => verify(config),
        CommandKind::Bench => bench(config),
        CommandKind::Report => report(config),
    }
}

fn structure_text(netlist: &Netlist) -> (String, Value) {
    let mut text = String::new();
    let _ = writeln!(text, "design {}", netlist.name());
    let mut value = json!({"design": netlist.name(), "gates": netlist.gates().len()});
    if let Ok(s) = structure_stats(netlist) {
        let _ = writeln!(text, "and cells        {}", s.and_cells);
        let _ = writeln!(text, "full adders      {}", s.full_adders);
        let _ = writeln!(text, "constant carries {}", s.constant_carries);
        let _ = writeln!(text, "product bits     {}", s.product_width);
        let _ = writeln!(text, "C-elements       {}", s.c_element_count);
        value["structure"] = json!(s);
    }
    let _ = writeln!(text, "gates            {}", netlist.gates().len());
    if let Ok(cp) = critical_path(netlist) {
        let _ = writeln!(text, "critical path    {} gates", cp.forward_length);
        value["critical_path"] = json!(cp.forward_length);
    }
    let census: Vec<String> = netlist.census().iter().map(|(k, n)| format!("{k}={n}")).collect();
    let _ = writeln!(text, "census           {}", census.join(" "));
    value["census"] = json!(netlist.census());
    (text, value)
}

fn gen(config: &RunConfig) -> Result<Output> {
    let netlist = design(config)?;
    let mut meta = netlist.meta().clone();
    meta.provenance = Some(provenance(config));
    let netlist = netlist.with_meta(meta);
    let path = config.out.join(format!("{}.json", netlist.name()));
    write_file(&path, serial::serialize(&netlist)?.as_bytes())?;
    let (mut text, mut value) = structure_text(&netlist);
    let _ = writeln!(text, "wrote {}", path.display());
    value["netlist"] = json!(path);
    Ok(Output {
        text,
        json: value,
        status: Status::Pass,
    })
}

/// Operand tuples for the netlist's input buses.
fn operands(config: &RunConfig, netlist: &Netlist) -> Result<Vec<Vec<u64>>> {
    if !config.operands.is_empty() {
        return Ok(config.operands.iter().map(|p| p.to_vec()).collect());
    }
    let widths: Vec<usize> = group_buses(netlist.input_ports()).iter().map(|b| b.width()).collect();
    let n = widths.iter().copied().max().unwrap_or(0);
    operand_list(&widths, &config.coverage.resolve(n, config.seed))
        .context("operand space too large for exhaustive coverage")
}

/// Integer products apply when the netlist has two input buses and one
/// output bus.
fn is_multiplier(netlist: &Netlist) -> bool {
    group_buses(netlist.input_ports()).len() == 2 && group_buses(netlist.output_ports()).len() == 1
}

fn sim(config: &RunConfig) -> Result<Output> {
    let netlist = design(config)?;
    let delay = config.delay()?;
    let ops = operands(config, &netlist)?;
    let mut harness = Harness::new(&netlist, &delay)?
        .with_mode(config.mode)
        .retain_trace(config.trace);
    let reports = harness.run_sequence(&ops)?;
    let returned = harness.finish()?;
    let summary = measure_latencies(&reports)?;
    let power = power_proxy(&reports)?;
    let mismatches = if is_multiplier(&netlist) {
        reports.iter().filter(|r| r.result != product_oracle(&r.operands)).count()
    } else {
        0
    };

    let name = netlist.name().to_string();
    let mut paths = Vec::new();
    let body = json!({
        "design": name,
        "delay_model": delay.to_string(),
        "summary": summary,
        "power_proxy": power,
        "mismatches": mismatches,
        "returned_to_reset": returned,
        "reports": serde_json::from_str::<Value>(&reports_to_json(&reports)?)?,
    });
    paths.push(write_json(config, &format!("{name}.sim.json"), &body)?);

    let buses: Vec<String> = harness.input_buses().iter().map(|b| b.name.clone()).collect();
    let mut csv = header_line(config).into_bytes();
    write_reports_csv(&mut csv, &buses, &reports)?;
    let path = config.out.join(format!("{name}.cycles.csv"));
    write_file(&path, &csv)?;
    paths.push(path);

    if config.trace {
        let mut csv = header_line(config).into_bytes();
        harness.trace().write_csv(&mut csv)?;
        let path = config.out.join(format!("{name}.trace.csv"));
        write_file(&path, &csv)?;
        paths.push(path);
        let mut vcd = Vec::new();
        let comment = header_line(config);
        harness
            .trace()
            .write_vcd_with_comment(&netlist, Some(comment.trim_start_matches("# ").trim_end()), &mut vcd)?;
        let path = config.out.join(format!("{name}.vcd"));
        write_file(&path, &vcd)?;
        paths.push(path);
    }

    let mut text = String::new();
    let _ = writeln!(text, "design {name} under {delay}, {} cycles", summary.cycles);
    for (label, s) in [("forward", summary.forward), ("reverse", summary.reverse), ("cycle", summary.cycle_time)] {
        let _ = writeln!(text, "{label:<8} min {:>4} max {:>4} mean {:.2}", s.min, s.max, s.mean);
    }
    let _ = writeln!(text, "forward == reverse on every cycle: {}", summary.forward_equals_reverse);
    let _ = writeln!(text, "transitions per cycle {power:.2}");
    if is_multiplier(&netlist) {
        let _ = writeln!(text, "wrong products {mismatches}");
    }
    for p in &paths {
        let _ = writeln!(text, "wrote {}", p.display());
    }
    let mut value = body;
    value["files"] = json!(paths);
    if let Some(r) = value.as_object_mut() {
        r.remove("reports");
    }
    Ok(Output {
        text,
        json: value,
        status: if mismatches == 0 && returned { Status::Pass } else { Status::Fail },
    })
}

fn verify(config: &RunConfig) -> Result<Output> {
    let netlist = design(config)?;
    let delay = config.delay()?;
    let handshake = netlist.has_handshake();
    let multiplier = is_multiplier(&netlist);
    let ops = if handshake { operands(config, &netlist)? } else { Vec::new() };
    let expected: Vec<u64> = if multiplier {
        ops.iter().map(|o| product_oracle(o)).collect()
    } else {
        Vec::new()
    };
    let widths: Vec<usize> = group_buses(netlist.input_ports()).iter().map(|b| b.width()).collect();
    let coverage = config.coverage.resolve(widths.iter().copied().max().unwrap_or(0), config.seed);

    let mut outcomes: Vec<CheckOutcome> = Vec::new();
    let mut skipped: Vec<(String, &str)> = Vec::new();
    let wants = |k: CheckKind| config.checks.contains(&k);
    let suite = if handshake && (wants(CheckKind::ProtocolConformance) || wants(CheckKind::Monotonicity)) {
        Some(check_handshake_suite(&netlist, &ops, &expected, &delay, config.mode).1)
    } else {
        None
    };
    for &check in &config.checks {
        let skip = |why| (check.name().to_string(), why);
        let outcome = match check {
            CheckKind::Functional if !multiplier => {
                skipped.push(skip("needs two input buses and one output bus"));
                continue;
            }
            CheckKind::Functional => check_functional(&netlist, &product_oracle, &coverage, &delay),
            CheckKind::ProtocolConformance | CheckKind::Monotonicity | CheckKind::DelayInsensitivity
                if !handshake =>
            {
                skipped.push(skip("needs a handshake netlist"));
                continue;
            }
            CheckKind::ProtocolConformance => suite.as_ref().expect("suite ran")[1].clone(),
            CheckKind::Monotonicity => suite.as_ref().expect("suite ran")[2].clone(),
            CheckKind::StrongIndication => check_strong_indication(&netlist, &delay),
            CheckKind::WeakIndication => check_weak_indication(&netlist, &delay, config.weak_samples, config.seed),
            CheckKind::DelayInsensitivity => {
                let range = match delay {
                    DelayModel::RandomPerGate { lo, hi, .. } => (lo, hi),
                    _ => DEFAULT_RANDOM_RANGE,
                };
                let pairs = &ops[..config.di_pairs.min(ops.len())];
                check_delay_insensitivity(&netlist, pairs, config.seed..config.seed + config.di_seeds, range)
            }
            CheckKind::Duality => check_rtz_rto_duality(&netlist, &coverage, &delay),
        };
        outcomes.push(outcome);
    }

    let name = netlist.name().to_string();
    let mut text = String::new();
    let mut cex_files = Vec::new();
    for o in &outcomes {
        let verdict = if o.passed { "PASS" } else { "FAIL" };
        let _ = write!(text, "{verdict} {:<22} {:>8} cases", o.name, o.cases);
        if !o.detail.is_empty() {
            let _ = write!(text, "  {}", o.detail);
        }
        text.push('\n');
        if let Some(cex) = &o.counterexample {
            let path = write_json(
                config,
                &format!("{name}.{}.cex.json", o.name),
                json!({"design": name, "counterexample": cex}),
            )?;
            let _ = writeln!(text, "     counterexample {}", path.display());
            cex_files.push(path);
        }
    }
    for (check, why) in &skipped {
        let _ = writeln!(text, "SKIP {check:<22} {why}");
    }
    let passed = outcomes.iter().all(|o| o.passed);
    // Counterexample traces live in their own files.
    let summary: Vec<Value> = outcomes
        .iter()
        .map(|o| json!({"name": o.name, "passed": o.passed, "cases": o.cases, "detail": o.detail}))
        .collect();
    let body = json!({
        "design": name,
        "delay_model": delay.to_string(),
        "passed": passed,
        "outcomes": summary,
        "skipped": skipped.iter().map(|(c, w)| json!({"name": c, "reason": w})).collect::<Vec<_>>(),
        "counterexamples": cex_files,
    });
    let path = write_json(config, &format!("{name}.verify.json"), &body)?;
    let _ = writeln!(text, "wrote {}", path.display());
    Ok(Output {
        text,
        json: body,
        status: if passed { Status::Pass } else { Status::Fail },
    })
}

fn bench_specs(sizes: &[usize]) -> Vec<MultiplierSpec> {
    let mut specs = Vec::new();
    for &n in sizes {
        for kind in [FullAdderKind::Dims, FullAdderKind::Weak] {
            for p in [Protocol::Rtz, Protocol::Rto] {
                specs.push(MultiplierSpec::new(n, kind, p));
            }
        }
    }
    specs
}

fn bench(config: &RunConfig) -> Result<Output> {
    let delay = config.delay()?;
    let area = config.area()?;
    for spec in bench_specs(&config.sizes) {
        spec.validate()?;
    }
    let table = run_bench(&bench_specs(&config.sizes), &delay, config.seed, &area);
    let text = table.to_text();
    let json_path = write_json(config, "bench.json", json!({"table": table}))?;
    let csv_path = config.out.join("bench.csv");
    write_file(&csv_path, format!("{}{}", header_line(config), table.to_csv()).as_bytes())?;
    let txt_path = config.out.join("bench.txt");
    write_file(&txt_path, format!("{}{text}", header_line(config)).as_bytes())?;

    let mut out = text;
    for p in [&json_path, &csv_path, &txt_path] {
        let _ = writeln!(out, "wrote {}", p.display());
    }
    Ok(Output {
        text: out,
        json: json!(table),
        status: if table.failures.is_empty() { Status::Pass } else { Status::Fail },
    })
}

fn report(config: &RunConfig) -> Result<Output> {
    let mut text = String::new();
    let mut values = Vec::new();
    let mut status = Status::Pass;
    for path in &config.inputs {
        let raw = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let doc: Value = serde_json::from_str(&raw).with_context(|| format!("parsing {}", path.display()))?;
        let _ = writeln!(text, "== {}", path.display());
        let (section, value, ok) = describe(&raw, &doc)?;
        text.push_str(&section);
        values.push(json!({"file": path, "summary": value}));
        if !ok {
            status = Status::Fail;
        }
    }
    Ok(Output {
        text,
        json: Value::Array(values),
        status,
    })
}

/// Text summary of one artifact, its JSON summary, and whether it records
/// a passing run.
fn describe(raw: &str, doc: &Value) -> Result<(String, Value, bool)> {
    if doc.get("gates").is_some() {
        let netlist = serial::deserialize(raw)?;
        let (text, value) = structure_text(&netlist);
        return Ok((text, value, true));
    }
    if let Some(table) = doc.get("table") {
        let table: BenchTable = serde_json::from_value(table.clone())?;
        let ok = table.failures.is_empty();
        return Ok((table.to_text(), json!({"groups": table.groups.len(), "failures": table.failures}), ok));
    }
    if let Some(outcomes) = doc.get("outcomes").and_then(Value::as_array) {
        let mut text = String::new();
        for o in outcomes {
            let passed = o["passed"].as_bool().unwrap_or(false);
            let _ = writeln!(
                text,
                "{} {} ({} cases) {}",
                if passed { "PASS" } else { "FAIL" },
                o["name"].as_str().unwrap_or("?"),
                o["cases"],
                o["detail"].as_str().unwrap_or("")
            );
        }
        let ok = doc["passed"].as_bool().unwrap_or(false);
        return Ok((text, json!({"passed": ok}), ok));
    }
    if let Some(summary) = doc.get("summary") {
        let text = format!(
            "{} under {}: forward mean {}, reverse mean {}, cycle mean {}, wrong products {}\n",
            doc["design"].as_str().unwrap_or("?"),
            doc["delay_model"].as_str().unwrap_or("?"),
            summary["forward"]["mean"],
            summary["reverse"]["mean"],
            summary["cycle_time"]["mean"],
            doc["mismatches"],
        );
        let ok = doc["mismatches"].as_u64() == Some(0);
        return Ok((text, summary.clone(), ok));
    }
    if let Some(cex) = doc.get("counterexample") {
        let cex: Counterexample = serde_json::from_value(cex.clone())?;
        let config: RunConfig = serde_json::from_value(doc["config"].clone())?;
        let netlist = design(&config)?;
        let reproduced = replay(&netlist, &cex);
        let text = format!(
            "{} counterexample on {}: {}\nreplay: {}\n",
            cex.check.name(),
            netlist.name(),
            cex.message,
            match &reproduced {
                Some(f) => format!("reproduced ({})", f.message),
                None => "did not reproduce".to_string(),
            }
        );
        let value = json!({"check": cex.check.name(), "reproduced": reproduced.is_some()});
        // A counterexample that replays confirms a failing design.
        return Ok((text, value, reproduced.is_none()));
    }
    bail!("unrecognised artifact")
}
