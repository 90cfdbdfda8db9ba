use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn qdi(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdi"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("qdi runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn gen_reports_structure() {
    let dir = TempDir::new().unwrap();
    let o = qdi(dir.path(), &["gen", "--n", "4", "--fa", "weak", "--protocol", "rtz"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("and cells        16"), "{text}");
    assert!(text.contains("full adders      12"), "{text}");
    let file = dir.path().join("out/mul4x4_weak_rtz.json");
    let netlist = qdi_core::netlist::serial::deserialize(&fs::read_to_string(file).unwrap()).unwrap();
    assert_eq!(netlist.meta().provenance.as_ref().unwrap()["version"], qdi_core::VERSION);

    let o = qdi(dir.path(), &["--json", "gen", "--n", "8", "--fa", "dims", "--protocol", "rto"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["structure"]["and_cells"], 64);
    assert_eq!(v["structure"]["full_adders"], 56);
}

#[test]
fn usage_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&qdi(dir.path(), &["gen", "--n", "1"])), 2);
    assert_eq!(code(&qdi(dir.path(), &["gen", "--fa", "ripple"])), 2);
    assert_eq!(code(&qdi(dir.path(), &["verify", "--netlist", "missing.json"])), 2);
    assert_eq!(code(&qdi(dir.path(), &["--delay-model", "random:5,2", "sim"])), 2);
    assert_eq!(code(&qdi(dir.path(), &[])), 2);
}

#[test]
fn verify_passes_on_generated_multiplier() {
    let dir = TempDir::new().unwrap();
    let o = qdi(
        dir.path(),
        &["verify", "--n", "4", "--fa", "dims", "--coverage", "exhaustive", "--checks", "functional,delay_insensitivity", "--di-seeds", "100"],
    );
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/mul4x4_dims_rtz.verify.json")).unwrap()).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["outcomes"][1]["cases"], 6400);
    assert_eq!(v["config"]["di_seeds"], 100);
}

#[test]
fn mutated_netlist_fails_with_replayable_counterexample() {
    let dir = TempDir::new().unwrap();
    let o = qdi(dir.path(), &["gen", "--n", "4", "--fa", "dims", "--mutate", "swap:fa[1][0]"]);
    assert_eq!(code(&o), 0);
    let o = qdi(
        dir.path(),
        &["verify", "--netlist", "out/mul4x4_dims_rtz_swap_fa1_0.json", "--checks", "functional"],
    );
    assert_eq!(code(&o), 1);
    let text = stdout(&o);
    assert!(text.contains("counterexample out/mul4x4_dims_rtz_swap_fa1_0.functional.cex.json"), "{text}");

    let o = qdi(dir.path(), &["report", "out/mul4x4_dims_rtz_swap_fa1_0.functional.cex.json"]);
    assert!(stdout(&o).contains("replay: reproduced"), "{}", stdout(&o));
    assert_eq!(code(&o), 1);
}

#[test]
fn bench_groups_and_normalizes() {
    let dir = TempDir::new().unwrap();
    let o = qdi(dir.path(), &["--json", "bench"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let groups = v["groups"].as_array().unwrap();
    assert_eq!(groups.len(), 1);
    let rows = groups[0]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for p in ["rtz", "rto"] {
        let ones = rows
            .iter()
            .filter(|r| r["spec"]["protocol"] == p && r["pctp_normalized"] == 1.0)
            .count();
        assert_eq!(ones, 1, "{p}");
    }

    let o = qdi(dir.path(), &["--json", "bench", "--sizes", "2,3"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["groups"].as_array().unwrap().len(), 2);
}

#[test]
fn bench_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let read = |name: &str| fs::read(dir.path().join(name)).unwrap();
    let mut first = Vec::new();
    for round in 0..2 {
        let o = qdi(dir.path(), &["--seed", "7", "bench", "--sizes", "2,4"]);
        assert_eq!(code(&o), 0);
        let files = [read("out/bench.json"), read("out/bench.csv"), read("out/bench.txt")];
        if round == 0 {
            first = files.to_vec();
        } else {
            assert_eq!(first, files.to_vec());
        }
    }
}

#[test]
fn artifacts_rerun_from_embedded_config() {
    let dir = TempDir::new().unwrap();
    let o = qdi(
        dir.path(),
        &["--delay-model", "random:1,20", "--seed", "5", "sim", "--n", "3", "--fa", "weak", "--protocol", "rto", "--coverage", "exhaustive", "--mode", "reactive", "--trace"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let names = ["mul3x3_weak_rto.sim.json", "mul3x3_weak_rto.cycles.csv", "mul3x3_weak_rto.trace.csv", "mul3x3_weak_rto.vcd"];
    let before: Vec<Vec<u8>> = names.iter().map(|n| fs::read(dir.path().join("out").join(n)).unwrap()).collect();
    fs::copy(dir.path().join("out/mul3x3_weak_rto.sim.json"), dir.path().join("saved.json")).unwrap();
    for n in names {
        fs::remove_file(dir.path().join("out").join(n)).unwrap();
    }

    let o = qdi(dir.path(), &["--config", "saved.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for (n, b) in names.iter().zip(&before) {
        assert_eq!(&fs::read(dir.path().join("out").join(n)).unwrap(), b, "{n}");
    }
    let vcd = String::from_utf8(before[3].clone()).unwrap();
    assert!(vcd.contains("\"seed\":5"));
}

#[test]
fn toml_config_and_delay_table() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("delays.json"), r#"{"C2": 3, "C3": 4, "OR2": 1, "OR3": 1, "OR4": 2}"#).unwrap();
    fs::write(
        dir.path().join("run.toml"),
        "command = \"sim\"\nn = 2\nfa_kind = \"dims\"\ndelay_model = \"table:delays.json\"\noperands = [[3, 3], [2, 1]]\n",
    )
    .unwrap();
    let o = qdi(dir.path(), &["--json", "--config", "run.toml"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["mismatches"], 0);
    assert_eq!(v["summary"]["cycles"], 2);
    assert!(v["delay_model"].as_str().unwrap().starts_with("table("));

    fs::write(dir.path().join("bad.toml"), "colour = \"red\"\n").unwrap();
    assert_eq!(code(&qdi(dir.path(), &["--config", "bad.toml"])), 2);
}

#[test]
fn report_summarises_artifacts() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&qdi(dir.path(), &["gen", "--n", "2"])), 0);
    assert_eq!(code(&qdi(dir.path(), &["verify", "--n", "2", "--di-seeds", "4"])), 0);
    let o = qdi(dir.path(), &["report", "out/mul2x2_weak_rtz.json", "out/mul2x2_weak_rtz.verify.json"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("and cells        4"), "{text}");
    assert!(text.contains("PASS functional"), "{text}");
}
