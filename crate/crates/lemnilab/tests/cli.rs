use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use lemnilab_core::hyper::{dfun_length, DFunctionSpec};
use lemnilab_core::jets::CatalogKind;
use serde_json::Value;

const TAU: f64 = std::f64::consts::TAU;

fn run(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_lemnilab"))
        .args(args)
        .env_remove("LEMNILAB_THREADS")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn");
    let _ = child.stdin.take().unwrap().write_all(stdin.as_bytes());
    child.wait_with_output().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

const Z2M1_GRID: &str = r#"{"roots":[[1,0],[-1,0]],"grid":{"start":0.2,"stop":3,"count":20},"analyses":"all"}"#;

#[test]
fn analyze_writes_rows_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["analyze", "--input", "-", "--out", out], Z2M1_GRID);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(dir.path(), "lengths.csv");
    assert!(csv.starts_with("t,length,phi,method,err_estimate\n"));
    let rows = csv_rows(&csv);
    assert_eq!(rows.len(), 20);
    let ts: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(ts.windows(2).all(|w| w[0] < w[1]));
    assert!(rows.iter().all(|r| r[3] == "traced"));
    let summary: Value = serde_json::from_str(&read(dir.path(), "summary.json")).unwrap();
    assert_eq!(summary["schema"], "lemnilab/1");
    assert_eq!(summary["critical"]["T"], 0.0);
    assert_eq!(summary["convexity"][0]["strictly_convex"], true);
    assert_eq!(summary["reports"].as_array().unwrap().len(), 20);
    assert_eq!(summary["reports"][0]["hankel"]["psd"], true);
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let spec = r#"{"roots":[[1,0],[-1,0],[0,1]],"grid":{"start":-2,"stop":2,"count":17}}"#;
    let a = run(&["analyze", "--input", "-", "--threads", "1"], spec);
    let b = run(&["analyze", "--input", "-", "--threads", "4"], spec);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn trivial_polynomial_has_constant_phi() {
    let o = run(&["analyze", "--input", "-", "--grid", "-2:2:9"], r#"{"coeffs":[[1,0],[0,0],[0,0]]}"#);
    assert!(o.status.success());
    for r in csv_rows(&String::from_utf8(o.stdout).unwrap()) {
        let phi: f64 = r[2].parse().unwrap();
        assert!((phi - TAU.ln()).abs() < 1e-9, "{phi}");
    }
}

#[test]
fn sine_row_matches_closed_form() {
    let o = run(&["analyze", "--input", "-"], r#"{"catalog":"sin","t":[-0.5]}"#);
    assert!(o.status.success());
    let rows = csv_rows(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(rows.len(), 1);
    let length: f64 = rows[0][1].parse().unwrap();
    let closed = dfun_length(&DFunctionSpec::for_catalog(CatalogKind::Sin).unwrap(), -0.5).unwrap();
    assert!((length - closed).abs() / closed < 1e-5);
}

#[test]
fn critical_level_is_extrapolated_in_analyze() {
    let o = run(&["analyze", "--input", "-", "--t", "0", "--format", "json"], r#"{"roots":[[1,0],[-1,0]]}"#);
    assert!(o.status.success());
    let v = stdout_json(&o);
    let row = &v["reports"][0];
    assert_eq!(row["method"], "extrapolated");
    assert!((row["L"].as_f64().unwrap() - 7.416298709205487).abs() < 1e-3);
}

#[test]
fn verify_full_suite_passes() {
    let o = run(&["verify", "--input", "-", "--format", "json", "--grid", "-2:2:6"], r#"{"roots":[[1,0],[-1,0]]}"#);
    let v = stdout_json(&o);
    assert!(o.status.success(), "{v}");
    let names: Vec<&str> = v["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    for n in
        ["winding", "hankel_psd", "strict_convexity", "exp_convexity_kernel", "laurent_tail", "complete_monotonicity"]
    {
        assert!(names.contains(&n), "{n}");
    }
    assert_eq!(v["passed"], true);
}

#[test]
fn verify_trivial_is_degenerate_pass() {
    let o = run(&["verify", "--input", "-", "--format", "json"], r#"{"roots":[[0.5,1],[0.5,1],[0.5,1]],"t":[-1,1]}"#);
    assert!(o.status.success());
    let v = stdout_json(&o);
    let hankel = v["checks"].as_array().unwrap().iter().find(|c| c["name"] == "hankel_psd").unwrap();
    assert_eq!(hankel["verdict"], "degenerate-pass");
}

#[test]
fn critical_level_in_verify_is_structured_error() {
    let o = run(&["verify", "--input", "-", "--t", "0"], r#"{"roots":[[1,0],[-1,0]]}"#);
    assert_eq!(o.status.code(), Some(3));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["schema"], "lemnilab/1");
    assert_eq!(err["error"]["kind"], "NearCriticalValue");
    assert_eq!(err["error"]["critical"], 0.0);
}

#[test]
fn parse_failures_exit_two() {
    for spec in [r#"{"roots":"#, r#"{"t":[1]}"#, r#"{"roots":[[1,0]],"grid":{"start":0,"stop":1,"count":100001}}"#] {
        let o = run(&["analyze", "--input", "-"], spec);
        assert_eq!(o.status.code(), Some(2), "{spec}");
    }
    let o = run(&["analyze", "--input", "-", "--grid", "1:2"], r#"{"roots":[[1,0]]}"#);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["analyze", "--bogus"], "");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failure_leaves_no_partial_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = run(&["analyze", "--input", "-", "--out", out.to_str().unwrap()], r#"{"roots":[[1,0],[-1,0]],"t":[1,2]}"#);
    assert!(o.status.success());
    let before = read(&out, "lengths.csv");
    let o = run(
        &["analyze", "--input", "-", "--out", out.to_str().unwrap()],
        r#"{"catalog":"sin","region":"all","params":{"window":4},"t":[-1,0.5]}"#,
    );
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(read(&out, "lengths.csv"), before);
    assert_eq!(fs::read_dir(&out).unwrap().count(), 2);
}

#[test]
fn laurent_dumps() {
    let o = run(
        &["laurent", "--input", "-", "--laurent-n", "16", "--format", "json"],
        r#"{"coeffs":[[1,0],[0,0],[-1,0]]}"#,
    );
    let v = stdout_json(&o);
    assert_eq!(v["N"], 16);
    assert_eq!(v["n"], 2);
    assert!((v["c"][2][0].as_f64().unwrap() + 0.25).abs() < 1e-15);
    assert_eq!(v["T"], 0.0);

    let o = run(
        &["laurent", "--input", "-", "--laurent-n", "32", "--format", "json"],
        r#"{"coeffs":[[1,0],[0,0],[1,0],[0,0]]}"#,
    );
    let v = stdout_json(&o);
    assert!((v["c"][2][0].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-12);

    let dir = tempfile::tempdir().unwrap();
    let o =
        run(&["laurent", "--input", "-", "--out", dir.path().to_str().unwrap()], r#"{"roots":[[0,0],[0,0],[0,0]]}"#);
    assert!(o.status.success());
    let atoms = csv_rows(&read(dir.path(), "atoms.csv"));
    assert_eq!(atoms.len(), 1);
    assert!((atoms[0][0].parse::<f64>().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    assert!((atoms[0][1].parse::<f64>().unwrap() - TAU).abs() < 1e-15);
    let v: Value = serde_json::from_str(&read(dir.path(), "laurent.json")).unwrap();
    assert_eq!(v["T"], Value::Null);
}

#[test]
fn laurent_rejects_catalog_input() {
    let o = run(&["laurent", "--input", "-"], r#"{"catalog":"tanh"}"#);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sample_dump_lists_every_component() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["analyze", "--input", "-", "--out", dir.path().to_str().unwrap()],
        r#"{"roots":[[1,0],[-1,0]],"t":[-1,1],"analyses":["samples"]}"#,
    );
    assert!(o.status.success());
    let rows = csv_rows(&read(dir.path(), "samples.csv"));
    let comps = |t: f64| {
        let mut c: Vec<&str> =
            rows.iter().filter(|r| r[0].parse::<f64>().unwrap() == t).map(|r| r[1].as_str()).collect();
        c.dedup();
        c.len()
    };
    assert_eq!(comps(-1.0), 2);
    assert_eq!(comps(1.0), 1);
}

#[test]
fn threads_env_is_honoured() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_lemnilab"))
        .args(["analyze", "--input", "-", "--t", "1"])
        .env("LEMNILAB_THREADS", "0")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let _ = child.stdin.take().unwrap().write_all(br#"{"roots":[[1,0],[-1,0]]}"#);
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
