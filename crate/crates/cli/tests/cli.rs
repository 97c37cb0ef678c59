//! End-to-end runs of the `hopfwarp` binary.

use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::Command;

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_hopfwarp")).args(args).output().expect("binary runs");
    (
        out.status.code().expect("exit code"),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn json(args: &[&str]) -> (i32, Value) {
    let (code, out, err) = run(args);
    let v = serde_json::from_str(&out).unwrap_or_else(|e| panic!("{args:?}: {e}\n{out}\n{err}"));
    (code, v)
}

fn manifest_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

/// Subset of JSON Schema used by the published report schema: `type`,
/// `required`, `properties`, `items`, `enum`, `minimum` and local `$ref`.
fn validate(v: &Value, schema: &Value, root: &Value, path: &str) -> Vec<String> {
    let mut errs = Vec::new();
    if let Some(r) = schema.get("$ref").and_then(Value::as_str) {
        let name = r.trim_start_matches("#/$defs/");
        return validate(v, &root["$defs"][name], root, path);
    }
    if let Some(t) = schema.get("type").and_then(Value::as_str) {
        let ok = match t {
            "object" => v.is_object(),
            "array" => v.is_array(),
            "string" => v.is_string(),
            "boolean" => v.is_boolean(),
            "integer" => v.is_u64() || v.is_i64(),
            "number" => v.is_number(),
            _ => true,
        };
        if !ok {
            errs.push(format!("{path}: expected {t}, got {v}"));
            return errs;
        }
    }
    if let Some(e) = schema.get("enum").and_then(Value::as_array) {
        if !e.contains(v) {
            errs.push(format!("{path}: {v} not in {e:?}"));
        }
    }
    if let (Some(m), Some(x)) = (schema.get("minimum").and_then(Value::as_f64), v.as_f64()) {
        if x < m {
            errs.push(format!("{path}: {x} < {m}"));
        }
    }
    if let Some(req) = schema.get("required").and_then(Value::as_array) {
        for k in req.iter().filter_map(Value::as_str) {
            if v.get(k).is_none() {
                errs.push(format!("{path}: missing {k}"));
            }
        }
    }
    if let Some(props) = schema.get("properties").and_then(Value::as_object) {
        for (k, s) in props {
            if let Some(x) = v.get(k) {
                errs.extend(validate(x, s, root, &format!("{path}.{k}")));
            }
        }
    }
    if let (Some(items), Some(arr)) = (schema.get("items"), v.as_array()) {
        for (i, x) in arr.iter().enumerate() {
            errs.extend(validate(x, items, root, &format!("{path}[{i}]")));
        }
    }
    errs
}

fn schema() -> Value {
    serde_json::from_str(&std::fs::read_to_string(manifest_path("schema/report.schema.json")).unwrap()).unwrap()
}

fn assert_valid(v: &Value) {
    let s = schema();
    let errs = validate(v, &s, &s, "$");
    assert!(errs.is_empty(), "{errs:#?}");
}

fn assert_stage_valid(v: &Value) {
    let s = schema();
    let errs = validate(v, &s["$defs"]["stage_report"], &s, "$stage");
    assert!(errs.is_empty(), "{errs:#?}");
}

/// Removes timing fields, the only nondeterministic part of a report.
fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.remove("wall_ms");
            m.values_mut().for_each(strip_timing);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

fn golden(name: &str, args: &[&str]) {
    let (code, mut v) = json(args);
    assert_eq!(code, 0, "{args:?}");
    strip_timing(&mut v);
    let text = serde_json::to_string_pretty(&v).unwrap() + "\n";
    let path = manifest_path(&format!("tests/golden/{name}.json"));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &text).unwrap();
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing {}; run with UPDATE_GOLDEN=1", path.display()));
    assert_eq!(text, want, "{name} drifted from its golden file");
}

#[test]
fn base_certifies_three_components() {
    let (code, v) = json(&["base", "--eps", "0.5", "--delta", "0.01"]);
    assert_eq!(code, 0);
    assert_valid(&v);
    let verdicts = v["body"]["report"]["verdicts"].as_array().unwrap();
    let ric: Vec<_> = verdicts.iter().filter(|x| x["component"].as_str().unwrap().starts_with("ric_")).collect();
    assert_eq!(ric.len(), 3);
    assert!(ric.iter().all(|x| x["status"] == "certified"));
    assert_stage_valid(&v["body"]["report"]);
    assert_eq!(v["body"]["aa_equals_two_over_delta_sq"], true);
}

#[test]
fn equivariance_residual_below_tolerance() {
    let (code, v) = json(&["equivariance", "--k", "3", "--samples", "1000"]);
    assert_eq!(code, 0);
    assert_valid(&v);
    assert!(v["body"]["max_residual"].as_f64().unwrap() < 1e-12);
}

#[test]
fn malformed_list_is_a_usage_error() {
    let (code, _, err) = run(&["schedule", "--ks", "2,x"]);
    assert_eq!(code, 1);
    assert!(err.contains("--ks"));
    assert_eq!(run(&["base", "--eps", "1.5"]).0, 1);
    assert_eq!(run(&["graph", "--ks", "2,3", "--depth", "4"]).0, 1);
    assert_eq!(run(&["no-such-command"]).0, 1);
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn exit_codes_follow_the_worst_verdict() {
    assert_eq!(run(&["base", "--margin", "1e9"]).0, 2);
    assert_eq!(run(&["frame-ricci", "--k", "1", "--f", "1", "--a", "1", "--b", "0.01"]).0, 2);
    let dir = tempdir("budget");
    let cfg = dir.join("tight.json");
    std::fs::write(&cfg, r#"{"certify":{"max_nodes":1,"max_depth":1}}"#).unwrap();
    let (code, v) = json(&["--config", cfg.to_str().unwrap(), "twist"]);
    assert_eq!(code, 3);
    assert_eq!(v["outcome"], "inconclusive");
}

#[test]
fn config_rejects_unknown_keys() {
    let dir = tempdir("cfg");
    let cfg = dir.join("bad.json");
    std::fs::write(&cfg, r#"{"chain":{"ks":[2,3]},"x4":{"M":10,"c1":2}}"#).unwrap();
    let (code, _, err) = run(&["--config", cfg.to_str().unwrap(), "graph"]);
    assert_eq!(code, 1);
    assert!(err.contains("unknown field"), "{err}");
}

#[test]
fn twist_reports_every_stage() {
    let (code, v) = json(&["twist", "--eps", "0.5", "--eps-hat", "0.01", "--delta", "0.01", "--k", "3"]);
    assert_eq!(code, 0);
    assert_valid(&v);
    let reports = v["body"]["reports"].as_array().unwrap();
    let names: Vec<&str> = reports.iter().map(|r| r["stage"].as_str().unwrap()).collect();
    assert_eq!(names, ["X1", "X2", "X3", "X4.A", "X4.B", "X4.C", "X5", "X6", "X7"]);
    reports.iter().for_each(assert_stage_valid);
    let x4b = reports.iter().find(|r| r["stage"] == "X4.B").unwrap();
    assert!(x4b["conditional_on"].is_string());
}

#[test]
fn stage_selection_and_csv_output() {
    let dir = tempdir("out");
    let cfg = dir.join("sel.json");
    std::fs::write(&cfg, r#"{"stages":["X6","X7"],"output":{"csv_samples":5}}"#).unwrap();
    let (code, v) = json(&["--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap(), "twist"]);
    assert_eq!(code, 0);
    assert_eq!(v["body"]["reports"].as_array().unwrap().len(), 2);
    let csv = std::fs::read_to_string(dir.join("samples_X6.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 6);
    assert!(lines[0].starts_with("x,"));
    // fixed 17 significant digits
    let first = lines[1].split(',').next().unwrap();
    assert_eq!(first.split('e').next().unwrap().replace(['.', '-'], "").len(), 17, "{first}");
    assert!(!dir.join("samples_X1.csv").exists());
    assert!(dir.join("twist.json").exists());
}

#[test]
fn extend_and_schedule_certify() {
    let (code, v) = json(&["extend", "--eps", "0.5", "--k", "3", "--gamma-order", "2"]);
    assert_eq!(code, 0, "{v}");
    assert_valid(&v);
    assert_eq!(v["body"]["punctures"].as_array().unwrap().len(), 3);
    let (code, v) = json(&["schedule", "--ks", "2,3", "--eps", "0.5,0.25"]);
    assert_eq!(code, 0);
    assert_valid(&v);
    assert_eq!(v["body"]["rows"].as_array().unwrap().len(), 2);
    assert_eq!(v["body"]["growth_exceeds_one"], true);
}

#[test]
fn graph_dot_and_json() {
    let (code, dot, _) = run(&["graph", "--ks", "2,3", "--format", "dot"]);
    assert_eq!(code, 0);
    assert!(dot.starts_with("digraph snowflake"));
    assert_eq!(dot.matches("->").count(), 3);
    let (_, v) = json(&["graph", "--ks", "2,3,2"]);
    assert_valid(&v);
    assert_eq!(v["body"]["laws"]["free"], true);
    assert_eq!(v["body"]["graph"]["edges"].as_array().unwrap().len(), 6 + 2);
}

#[test]
fn cones_table_lists_the_regimes() {
    let (code, table, _) = run(&["cones", "--bound", "4", "--format", "table"]);
    assert_eq!(code, 0);
    assert!(table.contains("[2, 2, 3, 2, 3, 4, 2, 3, 4, 5]"));
    assert!(table.contains("R3xS1") && table.contains("half-line"));
    let (_, v) = json(&["cones", "--policy", "constant-p", "--p", "2"]);
    assert_eq!(v["body"]["census"]["prefix"], serde_json::json!([2, 2]));
}

#[test]
fn frame_ricci_round_metric() {
    for k in ["1", "2", "3", "5"] {
        let (code, v) = json(&["frame-ricci", "--k", k]);
        assert_eq!(code, 0);
        assert!(v["body"]["max_deviation_from_2I"].as_f64().unwrap() < 1e-10);
    }
}

#[test]
fn reports_are_deterministic() {
    for args in [&["base"][..], &["equivariance", "--samples", "50"], &["extend", "--k", "2"]] {
        let (_, mut a) = json(args);
        let (_, mut b) = json(args);
        strip_timing(&mut a);
        strip_timing(&mut b);
        assert_eq!(a, b, "{args:?}");
    }
    let (_, a) = json(&["equivariance", "--samples", "50", "--seed", "9"]);
    assert_eq!(a["seed"], 9);
}

#[test]
fn golden_reports() {
    golden("base", &["base", "--eps", "0.5", "--delta", "0.01"]);
    golden("graph", &["graph", "--ks", "2,3"]);
    golden("cones", &["cones", "--bound", "4"]);
    golden("equivariance", &["equivariance", "--k", "2", "--samples", "20"]);
}

fn tempdir(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("hopfwarp-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}
