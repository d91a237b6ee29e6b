use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn sectors(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sectors")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn emit(dir: &TempDir, name: &str) -> PathBuf {
    let path = dir.path().join(format!("{name}.json"));
    let out = sectors(&["fixtures", "emit", name, "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write_json(path: &Path, value: &Value) {
    std::fs::write(path, serde_json::to_string(value).unwrap()).unwrap();
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn fixtures_list_names_every_fixture() {
    let out = sectors(&["fixtures", "list"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).lines().collect::<Vec<_>>(), ["z2", "z2-unrestricted", "z2-center", "trivial"]);
}

#[test]
fn emit_writes_manifest_next_to_document() {
    let dir = TempDir::new().unwrap();
    let doc = emit(&dir, "z2");
    let manifest = read_json(&dir.path().join("z2.json.manifest.json"));
    assert_eq!(manifest["name"], "z2");
    assert_eq!(manifest["duality_holds_everywhere"], true);
    let ids: Vec<String> = read_json(&doc)["objects"].as_object().unwrap().keys().cloned().collect();
    assert_eq!(ids, ["iota", "rho", "rho*rho", "rho+rho", "rho11"]);
}

#[test]
fn check_net_passes_on_z2() {
    let dir = TempDir::new().unwrap();
    let doc = emit(&dir, "z2");
    let report = dir.path().join("report.json");
    let out = sectors(&["check-net", s(&doc), "--out", s(&report)]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let r = read_json(&report);
    assert_eq!(r["passed"], true);
    assert_eq!(r["tolerance"], 1e-9);
    assert_eq!(r["net"]["duality"].as_array().unwrap().len(), 8);
}

#[test]
fn check_net_reports_unrestricted_duality_failure() {
    let out = sectors(&["check-net", "--fixture", "z2-unrestricted"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn broken_isotony_names_the_pair() {
    let dir = TempDir::new().unwrap();
    let doc = emit(&dir, "z2");
    let mut v = read_json(&doc);
    // shrink the algebra of a two-cell box to its unit
    let basis = v["net"]["regions"]["00-01"].as_array_mut().unwrap();
    let n = basis[0].as_array().unwrap().len();
    let unit: Vec<Vec<[f64; 2]>> = (0..n).map(|i| (0..n).map(|j| [if i == j { 1.0 } else { 0.0 }, 0.0]).collect()).collect();
    *basis = vec![serde_json::to_value(unit).unwrap()];
    v["objects"] = Value::Object(Default::default());
    write_json(&doc, &v);
    let report = dir.path().join("report.json");
    let out = sectors(&["check-net", s(&doc), "--out", s(&report)]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("00-00 <= 00-01"), "{}", stdout(&out));
    let r = read_json(&report);
    let failing: Vec<(String, String)> = r["net"]["isotony"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|p| p["defect"].as_f64().unwrap() >= 1e-9)
        .map(|p| (p["first"].as_str().unwrap().to_string(), p["second"].as_str().unwrap().to_string()))
        .collect();
    assert!(failing.contains(&("00-00".into(), "00-01".into())));
    assert!(failing.contains(&("01-01".into(), "00-01".into())));
    assert!(failing.iter().all(|(_, b)| b == "00-01"));
}

#[test]
fn malformed_input_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"site\": [").unwrap();
    assert_eq!(code(&sectors(&["check-net", s(&bad)])), 2);
    assert_eq!(code(&sectors(&["check-net", s(&dir.path().join("missing.json"))])), 2);
    assert_eq!(code(&sectors(&["check-net", "--fixture", "z7"])), 2);
    assert_eq!(code(&sectors(&["check-net"])), 2);
}

#[test]
fn unknown_object_is_a_usage_error() {
    let out = sectors(&["analyze", "--fixture", "z2", "--object", "sigma"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown object `sigma`"));
}

#[test]
fn analyze_unit_and_charge() {
    let dir = TempDir::new().unwrap();
    let doc = emit(&dir, "z2");
    for id in ["iota", "rho"] {
        let report = dir.path().join(format!("{id}.json"));
        let out = sectors(&["analyze", s(&doc), "--object", id, "--out", s(&report)]);
        assert_eq!(code(&out), 0, "{}", stdout(&out));
        let r = read_json(&report);
        assert_eq!(r["check"]["valid"], true);
        assert_eq!(r["transportable"], true);
        assert_eq!(r["commutant_dim"], 1);
        assert_eq!(r["faithfulness"]["by_kernel"], true);
        assert_eq!(r["faithfulness"]["by_central_support"], true);
        assert_eq!(r["simple"]["sign"], 1);
        assert_eq!(r["homogeneity"]["homogeneous"], true);
        assert_eq!(r["membership"]["member"], true);
        assert_eq!(r["tolerance"], 1e-9);
    }
}

#[test]
fn analyze_classical_compression_is_not_a_member() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("bit0.json");
    let out = sectors(&["analyze", "--fixture", "z2-center", "--object", "bit0", "--out", s(&report)]);
    assert_eq!(code(&out), 0);
    let r = read_json(&report);
    assert_eq!(r["faithfulness"]["by_kernel"], false);
    assert_eq!(r["faithfulness"]["by_central_support"], false);
    assert_eq!(r["faithfulness"]["consistent"], true);
    assert_eq!(r["membership"]["member"], false);
}

#[test]
fn conjugate_of_charge_runs_the_whole_chain() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("conj.json");
    let out = sectors(&["conjugate", "--fixture", "z2", "--object", "rho", "--out", s(&report)]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let r = read_json(&report);
    assert_eq!(r["standardness"]["standard"], true);
    assert!((r["standardness"]["c"]["re"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    let stages = r["chain"]["stages"].as_array().unwrap();
    assert_eq!(stages.len(), 7);
    assert!(stages.iter().all(|s| s["passed"] == true));
    assert!(r["chain"]["aborted_at"].is_null());
    let swap = r["swap_residuals"].as_array().unwrap();
    assert!(swap.iter().all(|x| x.as_f64().unwrap() < 1e-9));
}

#[test]
fn conjugate_without_solution_fails() {
    let out = sectors(&["conjugate", "--fixture", "z2", "--object", "rho", "--candidate", "rho+rho"]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("no solution found"), "{}", stdout(&out));
}

#[test]
fn unit_and_vacuum_charge_are_conjugate() {
    // on the vacuum sector the charge is implemented by an observable
    let out = sectors(&["conjugate", "--fixture", "z2", "--object", "iota", "--candidate", "rho"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
}

#[test]
fn cocycle_passes_on_charge() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("cocycle.json");
    let out = sectors(&["cocycle", "--fixture", "z2", "--object", "rho", "--out", s(&report)]);
    assert_eq!(code(&out), 0);
    let r = read_json(&report);
    assert!(r["cocycle"]["worst"].as_f64().unwrap() < 1e-9);
    assert_eq!(r["extension"]["holds"], true);
}

#[test]
fn corrupted_transporter_is_localized() {
    let dir = TempDir::new().unwrap();
    let doc = emit(&dir, "z2");
    let mut v = read_json(&doc);
    let t = &mut v["objects"]["rho"]["transporters"]["11-11"];
    let n = t.as_array().unwrap().len();
    let unit: Vec<Vec<[f64; 2]>> = (0..n).map(|i| (0..n).map(|j| [if i == j { 1.0 } else { 0.0 }, 0.0]).collect()).collect();
    *t = serde_json::to_value(unit).unwrap();
    write_json(&doc, &v);
    let report = dir.path().join("cocycle.json");
    let out = sectors(&["cocycle", s(&doc), "--object", "rho", "--out", s(&report)]);
    assert_eq!(code(&out), 1);
    let r = read_json(&report);
    assert!(r["cocycle"]["worst"].as_f64().unwrap() > 1.0);
    let bad: Vec<&Value> =
        r["cocycle"]["locality"].as_array().unwrap().iter().filter(|p| p["defect"].as_f64().unwrap() >= 1e-9).collect();
    assert!(!bad.is_empty());
    assert!(bad.iter().all(|p| p["first"] == "11-11" || p["second"] == "11-11"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let doc = emit(&dir, "z2");
    for cmd in ["check-net", "analyze", "conjugate", "cocycle"] {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let report = dir.path().join(format!("{cmd}-{run}.json"));
            let mut args = vec![cmd, s(&doc), "--out", s(&report)];
            if cmd != "check-net" {
                args.extend(["--object", "rho"]);
            }
            let out = sectors(&args);
            assert_eq!(code(&out), 0);
            outputs.push((out.stdout, std::fs::read(&report).unwrap()));
        }
        assert_eq!(outputs[0], outputs[1], "{cmd}");
    }
    let second = dir.path().join("again.json");
    emit(&dir, "z2");
    sectors(&["fixtures", "emit", "z2", "--out", s(&second)]);
    assert_eq!(std::fs::read(&doc).unwrap(), std::fs::read(&second).unwrap());
}
