use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn networks() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../networks")
}

fn net(name: &str) -> String {
    networks().join(name).to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zdnet"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(args: &[&str]) -> Value {
    let mut full = vec!["--format", "json"];
    full.extend_from_slice(args);
    let o = run(&full);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    serde_json::from_slice(&o.stdout).expect("valid json")
}

/// Writes a modified copy of a shipped network file.
fn variant(name: &str, edit: impl FnOnce(&mut Value)) -> (tempfile::TempDir, String) {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(networks().join(name)).unwrap()).unwrap();
    edit(&mut v);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(name);
    std::fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
    let p = path.to_string_lossy().into_owned();
    (dir, p)
}

#[test]
fn shipped_networks_validate() {
    for name in ["fig1-bsc-cf.json", "fig2-det-relay.json", "fig3-dmc.json", "fig4-wen.json"] {
        let o = run(&["validate", &net(name)]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
        assert!(stdout(&o).contains("valid: yes"));
    }
}

#[test]
fn infeasible_profile_exits_one() {
    let (_d, p) = variant("fig2-det-relay.json", |v| v["delay_profile"] = serde_json::json!([0, 1, 1]));
    let o = run(&["validate", &p]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o) + &stderr(&o);
    assert!(text.contains("zero-delay rule violated at node 1"), "{text}");
}

#[test]
fn overlapping_partition_exits_two() {
    let (_d, p) = variant("fig2-det-relay.json", |v| v["input_partition"] = serde_json::json!([[1, 2], [2, 3]]));
    let o = run(&["validate", &p]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_file_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{ \"nodes\": 3, ").unwrap();
    let o = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line"));
}

#[test]
fn missing_file_exits_two() {
    let o = run(&["validate", "/nonexistent/network.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn erasure_region_matches_min_cuts() {
    let v = json(&["region", &net("fig4-wen.json"), "--class", "wen", "--weights", "1,0,0"]);
    let value = v["optima"][0]["value_bits_per_slot"].as_f64().unwrap();
    assert!((value - 0.75).abs() < 1e-9);
    let cuts = v["region"]["cuts"].as_array().unwrap();
    let bound = |members: &[u64]| {
        cuts.iter()
            .find(|c| {
                let m: Vec<u64> = c["members"].as_array().unwrap().iter().map(|x| x.as_u64().unwrap()).collect();
                m == members
            })
            .map(|c| c["bound_bits_per_slot"].as_f64().unwrap())
            .unwrap()
    };
    assert!((bound(&[1]) - 0.75).abs() < 1e-9);
    assert!((bound(&[1, 2]) - 1.0).abs() < 1e-9);
}

#[test]
fn dmc_region_uses_edge_capacities() {
    let v = json(&["region", &net("fig3-dmc.json"), "--class", "dmc", "--weights", "1,0,0"]);
    let value = v["optima"][0]["value_bits_per_slot"].as_f64().unwrap();
    // two parallel BSC(0.11) edges leave node 1
    let c = 1.0 + 0.11 * 0.11f64.log2() + 0.89 * 0.89f64.log2();
    assert!((value - 2.0 * c).abs() < 1e-6, "{value}");
}

#[test]
fn deterministic_region_of_the_relay() {
    let v = json(&["region", &net("fig2-det-relay.json"), "--class", "det", "--weights", "1,0,0", "--samples", "64"]);
    let value = v["optima"][0]["value_bits_per_slot"].as_f64().unwrap();
    assert!((value - 1.0).abs() < 1e-6, "{value}");
}

#[test]
fn class_mismatch_exits_two() {
    let o = run(&["region", &net("fig4-wen.json"), "--class", "det"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("not deterministic"));
}

#[test]
fn compare_bounds_pass() {
    for (name, class) in [("fig3-dmc.json", "dmc"), ("fig4-wen.json", "wen"), ("fig2-det-relay.json", "det")] {
        let o = run(&["compare-bounds", &net(name), "--class", class, "--samples", "20"]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}{}", stdout(&o), stderr(&o));
    }
}

#[test]
fn simulate_relay_code() {
    let o = run(&[
        "simulate",
        &net("fig2-det-relay.json"),
        &net("fig2-relay-code.json"),
        "--check-lemma1",
        "--check-theorem5",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&[
        "simulate",
        &net("fig2-det-relay.json"),
        &net("fig2-relay-code.json"),
        "--check-theorem5",
    ]);
    assert_eq!(v["error"]["probability"].as_f64(), Some(0.0), "{v}");
}

#[test]
fn simulate_repetition_code_exactly_and_by_sampling() {
    let v = json(&["simulate", &net("fig4-wen.json"), &net("fig4-repetition-code.json")]);
    let exact = v["error"]["probability"].as_f64().unwrap();
    assert!((exact - 0.009765625).abs() < 1e-12, "{v}");
    let v = json(&[
        "simulate",
        &net("fig4-wen.json"),
        &net("fig4-repetition-code.json"),
        "--samples",
        "20000",
        "--seed",
        "3",
    ]);
    let est = v["error"]["probability"].as_f64().unwrap();
    assert!((est - exact).abs() < 0.005, "{v}");
}

#[test]
fn capacity_closed_forms() {
    let c = |name: &str| json(&["capacity", &net(name)])["capacity_bits"].as_f64().unwrap();
    assert!((c("bec-0.3.json") - 0.7).abs() < 1e-9);
    assert!((c("identity-4.json") - 2.0).abs() < 1e-9);
    let bsc = 1.0 + 0.11 * 0.11f64.log2() + 0.89 * 0.89f64.log2();
    assert!((c("bsc-0.11.json") - bsc).abs() < 1e-9);
}

#[test]
fn table_output_is_default() {
    let o = run(&["capacity", &net("bec-0.3.json")]);
    assert!(stdout(&o).starts_with("capacity: 0.700000000 bits"));
}
