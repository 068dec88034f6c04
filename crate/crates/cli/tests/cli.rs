use std::path::PathBuf;

use birkhoff_cli::{run_command, CommandOutput, EXIT_FAILED, EXIT_NOT_INVERTIBLE, EXIT_OK, EXIT_PARSE};
use serde_json::Value;

fn golden(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("{name}.loop"))
        .display()
        .to_string()
}

fn run(args: &[&str]) -> CommandOutput {
    run_command(std::iter::once("birkhoff").chain(args.iter().copied()))
}

fn json(out: &CommandOutput) -> Value {
    serde_json::from_str(&out.stdout).unwrap_or_else(|e| panic!("bad json ({e}): {}", out.stdout))
}

#[test]
fn scalar_factor_of_z_minus_2() {
    let out = run(&["factor", "--mode", "scalar", "--input", &golden("z_minus_2")]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let r = json(&out);
    assert_eq!(r["result"]["kappa"], 0);
    assert!(r["result"]["residuals"]["reconstruction"].as_f64().unwrap() <= 1e-9);
    assert_eq!(r["result"]["verify"]["passed"], true);
    assert_eq!(r["passed"], true);
    assert!(r["input_digest"].as_str().unwrap().starts_with("sha256:"));
    assert!(r.get("timings_ms").is_none());
}

#[test]
fn winding_of_z5() {
    let out = run(&["winding", "-i", &golden("z5")]);
    assert_eq!(out.code, EXIT_OK);
    assert_eq!(json(&out)["result"]["winding"], 5);
    let out = run(&["winding", "-i", &golden("diag_z2_zinv")]);
    assert_eq!(json(&out)["result"]["winding"], 1);
}

#[test]
fn loop_vanishing_on_circle_exits_3() {
    let out = run(&[
        "factor",
        "--mode",
        "matrix",
        "--bound",
        "4",
        "-i",
        &golden("one_minus_z"),
    ]);
    assert_eq!(out.code, EXIT_NOT_INVERTIBLE);
    let r = json(&out);
    assert_eq!(r["status"], "error");
    assert_eq!(r["error"]["kind"], "not-invertible");
}

#[test]
fn parse_failures_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.loop");
    std::fs::write(
        &bad,
        r#"{"version":1,"n":1,"kmin":0,"kmax":2,"entries":[[[[1,0],[2,0]]]]}"#,
    )
    .unwrap();
    let out = run(&["winding", "-i", bad.to_str().unwrap()]);
    assert_eq!(out.code, EXIT_PARSE);
    assert!(out.stderr.contains("entries[0][0]"), "{}", out.stderr);

    let missing = dir.path().join("missing.loop");
    assert_eq!(run(&["norms", "-i", missing.to_str().unwrap()]).code, EXIT_PARSE);
    assert_eq!(run(&["factor", "--mode", "banana"]).code, EXIT_PARSE);
    assert_eq!(run(&["winding"]).code, EXIT_PARSE);
    assert_eq!(run(&["frobnicate"]).code, EXIT_PARSE);
    let help = run(&["--help"]);
    assert_eq!(help.code, EXIT_OK);
    assert!(help.stdout.contains("bch-check"));
}

#[test]
fn scalar_mode_rejects_matrix_input() {
    let out = run(&["factor", "--mode", "scalar", "-i", &golden("diag_z2_zinv")]);
    assert_eq!(out.code, EXIT_PARSE);
}

#[test]
fn matrix_and_group_modes() {
    let out = run(&["factor", "-i", &golden("planted_1_m1")]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let r = json(&out);
    assert_eq!(r["result"]["indices"], serde_json::json!([1, -1]));
    assert_eq!(r["result"]["verify"]["sum_rule_ok"], true);

    let out = run(&["factor", "--mode", "group", "-i", &golden("sl2_small")]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    assert!(json(&out)["result"]["solver"]["iterations"].as_u64().unwrap() >= 1);

    // outside the default solver ball, inside a wider one
    let out = run(&["factor", "--mode", "group", "-i", &golden("sl2_near_identity")]);
    assert_eq!(out.code, EXIT_FAILED);
    let out = run(&[
        "factor",
        "--mode",
        "group",
        "--radius",
        "0.2",
        "-i",
        &golden("sl2_near_identity"),
    ]);
    assert_eq!(out.code, EXIT_OK);
}

#[test]
fn indices_under_both_orders() {
    for extra in [vec![], vec!["--shuffle", "11"]] {
        let mut args = vec!["indices", "-i"];
        let path = golden("planted_1_m1");
        args.push(&path);
        args.extend(extra.iter().copied());
        let out = run(&args);
        assert_eq!(out.code, EXIT_OK);
        assert_eq!(json(&out)["result"]["indices"], serde_json::json!([1, -1]));
    }
}

#[test]
fn project_and_norms() {
    let out = run(&["project", "-i", &golden("mixed_scalar")]);
    let r = json(&out);
    assert_eq!(r["result"]["exact"], true);
    assert_eq!(r["result"]["ominus"]["kmax"], -1);
    assert_eq!(r["result"]["plus"]["kmin"], 0);

    let out = run(&["norms", "--weights", "0,3", "--annuli", "2", "-i", &golden("z_minus_2")]);
    let r = json(&out);
    assert_eq!(r["result"]["wiener"], 3.0);
    assert_eq!(r["result"]["weighted"]["3"], 3.0);
    assert_eq!(r["result"]["annulus"]["2"], 3.5);
}

#[test]
fn factor_then_verify_with_trace() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let trace = dir.path().join("trace.csv");
    let out = run(&[
        "factor",
        "-i",
        &golden("planted_1_m1"),
        "--trace-csv",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(out.code, EXIT_OK);
    std::fs::write(&report, &out.stdout).unwrap();
    let csv = std::fs::read_to_string(&trace).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("sample_index,theta,residual"));
    assert_eq!(lines.count(), 256);

    let out = run(&[
        "verify",
        "-i",
        &golden("planted_1_m1"),
        "--factors",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stdout);
    assert_eq!(json(&out)["result"]["passed"], true);

    // the same factors do not fit a different loop
    let out = run(&[
        "verify",
        "-i",
        &golden("diag_z2_zinv"),
        "--factors",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.code, EXIT_FAILED);
}

#[test]
fn batch_output_is_ordered_and_deterministic() {
    let names = [
        "diag_z2_zinv",
        "planted_1_m1",
        "constant_2x2",
        "sl2_small",
        "one_minus_z",
    ];
    let paths: Vec<String> = names.iter().map(|n| golden(n)).collect();
    let mut args = vec!["factor".to_string()];
    for p in &paths {
        args.push("-i".into());
        args.push(p.clone());
    }
    let serial = run_command(std::iter::once("birkhoff".to_string()).chain(args.iter().cloned()));
    let mut par_args = args.clone();
    par_args.extend(["--jobs".to_string(), "4".to_string()]);
    let parallel = run_command(std::iter::once("birkhoff".to_string()).chain(par_args.iter().cloned()));
    assert_eq!(serial.stdout, parallel.stdout);
    // first failure in input order decides the exit code
    assert_eq!(serial.code, EXIT_NOT_INVERTIBLE);
    let reports = json(&serial);
    let inputs: Vec<&str> = reports
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["input"].as_str().unwrap())
        .collect();
    assert_eq!(inputs, paths.iter().map(String::as_str).collect::<Vec<_>>());
}

#[test]
fn timings_are_opt_in() {
    let out = run(&["winding", "-i", &golden("z5"), "--timings"]);
    assert!(json(&out)["timings_ms"]["compute"].is_number());
}

#[test]
fn bch_check_passes_with_defaults() {
    let out = run(&["bch-check", "--pairs", "20"]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stdout);
    let r = json(&out);
    assert!(r["result"]["remainder_lipschitz"].as_f64().unwrap() <= 0.27);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_birkhoff");
    let status = std::process::Command::new(bin)
        .args(["winding", "-i", &golden("z5")])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(EXIT_OK));
    let status = std::process::Command::new(bin)
        .args(["winding", "-i", &golden("one_minus_z")])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(EXIT_NOT_INVERTIBLE));
}
