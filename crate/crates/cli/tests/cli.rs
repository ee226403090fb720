use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn spheremin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spheremin")).args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn check_schema(name: &str, instance: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{name}.schema.json"));
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(instance).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{name}: {errors:?}");
}

#[test]
fn classify_pframe_three() {
    let v = json_of(&spheremin(&["classify", "--kernel", "pframe:3", "--d", "3", "--nmax", "12"]));
    check_schema("classify", &v);
    assert_eq!(v["pd_up_to_constant"], Value::Bool(false));
    assert_eq!(v["most_negative"]["degree"], 6);
    assert!(v["meta"]["unix_time"].is_u64());
}

#[test]
fn icosahedron_energy() {
    let v = json_of(&spheremin(&["energy", "--config", "builtin:icosahedron", "--kernel", "pframe:3"]));
    check_schema("energy", &v);
    assert!((v["energy"].as_f64().unwrap() - 0.241202).abs() < 1e-6);
}

#[test]
fn even_witness_exponent_is_a_domain_error() {
    let out = spheremin(&["witness", "--p", "4", "--d", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("p is an even integer"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(spheremin(&["classify", "--bogus"]).status.code(), Some(1));
    assert_eq!(spheremin(&["nonsense"]).status.code(), Some(1));
    assert_eq!(spheremin(&["witness", "--d", "3"]).status.code(), Some(1));
    assert_eq!(spheremin(&["--help"]).status.code(), Some(0));
}

#[test]
fn bad_inputs_exit_two() {
    assert_eq!(spheremin(&["classify", "--kernel", "pframe:-1", "--d", "3"]).status.code(), Some(2));
    assert_eq!(spheremin(&["energy", "--config", "/no/such/file.csv", "--kernel", "acute"]).status.code(), Some(2));
}

#[test]
fn minimize_is_reproducible() {
    let args = ["minimize", "--kernel", "pframe:3", "--d", "2", "--atoms", "8", "--starts", "4", "--seed", "3", "--no-meta"];
    let a = spheremin(&args);
    let b = spheremin(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v = json_of(&a);
    check_schema("minimize", &v);
    assert!(v.get("meta").is_none());
}

#[test]
fn minimize_trace_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let out = dir.path().join("report.json");
    let status = spheremin(&[
        "minimize", "--kernel", "poly:0,0,1", "--d", "3", "--atoms", "6", "--starts", "2",
        "--trace", trace.to_str().unwrap(), "--out", out.to_str().unwrap(),
    ]);
    assert!(status.status.success());
    assert!(status.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    check_schema("minimize", &v);
    let csv = std::fs::read_to_string(&trace).unwrap();
    assert!(csv.starts_with("start,iter,energy,grad_norm,step\n"));
    assert!(csv.lines().count() > 2);
}

#[test]
fn reduce_pipeline_frame_kernel() {
    let v = json_of(&spheremin(&["reduce", "--kernel", "poly:0,0,1", "--d", "3", "--nmax", "2", "--atoms", "20", "--seed", "1"]));
    check_schema("reduce", &v);
    assert_eq!(v["support_bound"], 6);
    assert!(v["reduction"]["final_support"].as_u64().unwrap() <= 6);
    assert!((v["final_energy"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-6);
    assert_eq!(v["reduction"]["g_monotone"], Value::Bool(true));
}

#[test]
fn reduce_constant_kernel_to_one_atom() {
    let v = json_of(&spheremin(&["reduce", "--kernel", "poly:2", "--d", "3", "--nmax", "2", "--atoms", "5", "--starts", "2"]));
    assert_eq!(v["reduction"]["final_support"], 1);
}

#[test]
fn reduce_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("onb.csv");
    std::fs::write(&path, "x1,x2,x3,weight\n1,0,0,0.25\n0,1,0,0.25\n0,0,1,0.25\n-1,0,0,0.25\n").unwrap();
    let v = json_of(&spheremin(&["reduce", "--kernel", "poly:0,0,1", "--d", "3", "--nmax", "2", "--config", path.to_str().unwrap()]));
    assert!(v["minimize"].is_null());
    assert_eq!(v["input_atoms"], 4);
}

#[test]
fn expand_and_potential_and_designs_validate() {
    let v = json_of(&spheremin(&["expand", "--kernel", "acute", "--d", "3", "--nmax", "6"]));
    check_schema("expand", &v);
    let v = json_of(&spheremin(&["potential", "--config", "builtin:cube", "--kernel", "poly:0,0,1", "--grid", "500"]));
    check_schema("potential", &v);
    assert!(v["report"]["constancy_gap"].as_f64().unwrap() < 1e-12);
    let v = json_of(&spheremin(&["designs", "--config", "builtin:icosahedron"]));
    check_schema("designs", &v);
    assert_eq!(v["design"]["strength"], 5);
}

#[test]
fn witness_single_and_scan() {
    let dir = tempfile::tempdir().unwrap();
    let v = json_of(&spheremin(&["witness", "--p", "3", "--d", "3"]));
    check_schema("witness", &v);
    assert!(v["witness"]["quadratic_form_value"].as_f64().unwrap() < -1e-12);
    let csv = dir.path().join("scan.csv");
    let v = json_of(&spheremin(&["witness", "--scan", "0.5:4:0.5", "--d", "2", "--trace", csv.to_str().unwrap()]));
    check_schema("witness-scan", &v);
    let text = std::fs::read_to_string(csv).unwrap();
    assert_eq!(text.lines().count(), 9);
    assert!(text.lines().nth(4).unwrap().ends_with("rejected"));
}

#[test]
fn verify_diffop_reports_no_violations() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("verdicts.csv");
    let v = json_of(&spheremin(&["verify-diffop", "--k", "2", "--d", "4", "--trace", csv.to_str().unwrap()]));
    check_schema("verify-diffop", &v);
    assert_eq!(v["scan"]["violations"], 0);
    assert_eq!(v["scan"]["indeterminate"], 0);
    assert_eq!(std::fs::read_to_string(csv).unwrap().lines().count(), 8);
}

#[test]
fn floats_carry_seventeen_digits() {
    let out = spheremin(&["energy", "--config", "builtin:icosahedron", "--kernel", "pframe:3", "--no-meta"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.lines().find(|l| l.contains("\"energy\"")).unwrap();
    let mantissa = line.split(':').nth(1).unwrap().trim().trim_end_matches(',').split('e').next().unwrap();
    assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
}
