use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tscale-cli-{}-{tag}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn tscale(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tscale")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn without_provenance(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("provenance");
    v
}

fn run_to_json(args: &[&str]) -> (String, i32) {
    let out = tscale(args);
    assert!(
        matches!(code(&out), 0 | 3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let c = code(&out);
    (String::from_utf8(out.stdout).unwrap(), c)
}

/// Compares with the stored golden report; `UPDATE_GOLDEN=1` rewrites it.
fn check_golden(name: &str, args: &[&str]) {
    let (first, _) = run_to_json(args);
    let (second, _) = run_to_json(args);
    assert_eq!(first, second, "report is not byte-stable");
    let body = without_provenance(serde_json::from_str(&first).unwrap());
    let pretty = serde_json::to_string_pretty(&body).unwrap() + "\n";
    let path = golden(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, &pretty).unwrap();
    }
    let expected = fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden {}", path.display()));
    assert_eq!(pretty, expected, "report differs from {}", path.display());
}

#[test]
fn golden_controllable_observable_example() {
    let doc = data("integers.toml");
    check_golden("integers.analyze.json", &["analyze", doc.to_str().unwrap()]);
    let (text, _) = run_to_json(&["analyze", doc.to_str().unwrap()]);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["controllability"]["kalman"]["rank"], 2);
    assert_eq!(v["observability"]["kalman"]["rank"], 2);
    assert_eq!(v["realization"]["minimality"]["minimal"], true);
    assert_eq!(v["controllability"]["kalman"]["matrix"][0][1], "-29/90");
}

#[test]
fn golden_transfer_function_example() {
    let tf = data("second_order.tf");
    check_golden("second_order.realize.json", &["realize", tf.to_str().unwrap()]);
    let (text, _) = run_to_json(&["realize", tf.to_str().unwrap()]);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["realization"]["n"], 2);
    assert_eq!(v["realization"]["round_trip_exact"], true);
    assert_eq!(v["realization"]["minimality"]["minimal"], true);
}

#[test]
fn golden_mixed_grid_stability_example() {
    let doc = data("mixed_grid.toml");
    check_golden("mixed_grid.analyze.json", &["analyze", doc.to_str().unwrap()]);
    let (text, _) = run_to_json(&["stability", doc.to_str().unwrap()]);
    let v: Value = serde_json::from_str(&text).unwrap();
    let st = &v["stability"];
    assert_eq!(st["spectrum"]["verdict"], "stable");
    assert_eq!(st["exp_integral"]["verdict"], "stable");
    assert_eq!(st["bibo_ti"]["verdict"], "stable");
    assert_eq!(st["bibo_ti"]["routes_agree"], true);
    assert!(v.get("controllability").is_none());
}

#[test]
fn text_mirror_written_with_out_prefix() {
    let dir = scratch("mirror");
    let prefix = dir.join("report");
    let out = tscale(&[
        "analyze",
        data("integers.toml").to_str().unwrap(),
        "--out",
        prefix.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(dir.join("report.txt")).unwrap();
    assert!(text.contains("controllability.kalman.rank = 2\n"));
    let json: Value = serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
}

#[test]
fn nonregressive_document_still_reports_algebra() {
    let out = tscale(&["analyze", data("nonregressive.toml").to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["regressivity"]["ok"], false);
    assert_eq!(v["controllability"]["gramian"]["status"], "unavailable");
    assert_eq!(v["controllability"]["kalman"]["rank"], 1);
    assert_eq!(v["observability"]["pbh"]["pass"], true);
}

#[test]
fn zero_input_matrix_document() {
    let out = tscale(&["analyze", data("zero_input_matrix.toml").to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["controllability"]["kalman"]["rank"], 0);
    assert_eq!(v["controllability"]["gramian"]["invertible"], false);
    let steer = tscale(&[
        "simulate",
        data("zero_input_matrix.toml").to_str().unwrap(),
        "--steer",
        "0,0",
    ]);
    assert_eq!(code(&steer), 3);
    assert!(String::from_utf8_lossy(&steer.stderr).contains("not controllable"));
}

#[test]
fn input_errors_exit_with_two() {
    let dir = scratch("errors");
    let missing = dir.join("missing.toml");
    assert_eq!(code(&tscale(&["analyze", missing.to_str().unwrap()])), 2);
    let bad = dir.join("bad.toml");
    fs::write(&bad, "[timescale]\nspec = \"points 0 1\"\n[system]\nA = [[1, 2]]\nB = [[1]]\nC = [[1]]\n").unwrap();
    let out = tscale(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("dimension"));
    let garbled = dir.join("garbled.toml");
    fs::write(&garbled, "[timescale\nspec = 1").unwrap();
    assert_eq!(code(&tscale(&["analyze", garbled.to_str().unwrap()])), 2);
    assert_eq!(code(&tscale(&["frobnicate"])), 2);
    let tf = dir.join("bad.tf");
    fs::write(&tf, "1 / 0\n").unwrap();
    assert_eq!(code(&tscale(&["realize", tf.to_str().unwrap()])), 2);
}

#[test]
fn improper_transfer_function_fails_precondition() {
    let dir = scratch("improper");
    let tf = dir.join("improper.tf");
    fs::write(&tf, "1,1 / 1,1\n").unwrap();
    let out = tscale(&["realize", tf.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("strictly-proper rational function of z"));
}

#[test]
fn realize_small_cases() {
    let dir = scratch("realize");
    let tf = dir.join("integrator.tf");
    fs::write(&tf, "1 / 0,1\n").unwrap();
    let prefix = dir.join("integrator");
    let out = tscale(&["realize", tf.to_str().unwrap(), "--out", prefix.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.join("integrator.json")).unwrap()).unwrap();
    assert_eq!(v["realization"]["A"], serde_json::json!([["0"]]));
    assert_eq!(v["realization"]["B"], serde_json::json!([["1"]]));
    assert_eq!(v["realization"]["C"], serde_json::json!([["1"]]));
    // the emitted document is itself analyzable
    let analyzed = tscale(&["analyze", dir.join("integrator.toml").to_str().unwrap()]);
    assert_eq!(code(&analyzed), 0);

    let diag = dir.join("diag.tf");
    fs::write(&diag, "1 / 1,1 ; 0 / 1\n0 / 1 ; 1 / 2,1\n").unwrap();
    let out = tscale(&["realize", diag.to_str().unwrap()]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["realization"]["n"], 4);
    assert_eq!(v["realization"]["round_trip_exact"], true);
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let head = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap_or(f64::NAN)).collect())
        .collect();
    (head, rows)
}

#[test]
fn simulate_steers_and_reconstructs() {
    let dir = scratch("steer");
    let doc = dir.join("steer.toml");
    let text = fs::read_to_string(data("integers.toml"))
        .unwrap()
        .replace("points 0 1 2 3 4 5 6 7 8 9 10", "points 0 1 2 3 4")
        .replace("horizons = [4, 6, 8, 10]", "horizons = [2, 4]");
    fs::write(&doc, text).unwrap();
    let prefix = dir.join("run");
    let out = tscale(&[
        "simulate",
        doc.to_str().unwrap(),
        "--steer",
        "0,0",
        "--reconstruct",
        "--out",
        prefix.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.join("run.json")).unwrap()).unwrap();
    let err = v["simulation"]["steering"]["terminal_error"].as_f64().unwrap();
    assert!(err <= 1e-8, "terminal error {err}");
    let rec = v["simulation"]["reconstruction"]["error"].as_f64().unwrap();
    assert!(rec <= 1e-8);
    let (head, rows) = csv_rows(&fs::read_to_string(dir.join("run.csv")).unwrap());
    assert_eq!(head, ["t", "x1", "x2", "y1", "u1"]);
    assert_eq!(rows.len(), 5);
    assert_eq!(&rows[0][..3], &[0.0, 5.0, 2.0]);
}

#[test]
fn simulate_zero_dynamics_is_constant() {
    let dir = scratch("const");
    let doc = dir.join("zero.toml");
    fs::write(
        &doc,
        "[timescale]\nspec = \"interval 0 1 0.25; points 2 3\"\n\n[system]\nA = [[0, 0], [0, 0]]\nB = [[1], [0]]\nC = [[1, 1]]\n\n[analysis]\nx0 = [\"1/2\", -3]\n",
    )
    .unwrap();
    let out = tscale(&["simulate", doc.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let (_, rows) = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 7);
    for r in &rows {
        assert_eq!(&r[1..4], &[0.5, -3.0, -2.5]);
    }
}

#[test]
fn flags_override_document_options() {
    let out = tscale(&[
        "stability",
        data("integers.toml").to_str().unwrap(),
        "--horizons",
        "5,10",
        "--delta-margin",
        "0.01",
    ]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["options"]["horizons"], serde_json::json!([5.0, 10.0]));
    assert_eq!(v["stability"]["delta_margin"], 0.01);
    let bad = tscale(&["stability", data("integers.toml").to_str().unwrap(), "--horizons", "2.5"]);
    assert_eq!(code(&bad), 2);
}
