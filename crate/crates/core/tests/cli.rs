//! End-to-end checks of the command-line binary: exit codes, report shape,
//! determinism and the CSV rendering.

use std::io::Write;
use std::process::{Command, Stdio};

fn run_spec(spec: &str, extra: &[&str]) -> (i32, String, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_integrable"));
    cmd.args(["--spec", "-"]).args(extra);
    cmd.stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped());
    let mut child = cmd.spawn().expect("binary spawns");
    child
        .stdin
        .as_mut()
        .unwrap()
        .write_all(spec.as_bytes())
        .unwrap();
    let out = child.wait_with_output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn canonical_preset_exits_zero_with_index_one() {
    let (code, stdout, _) = run_spec(r#"{"command": "maslov-index"}"#, &[]);
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["results"]["index"], 1);
    assert_eq!(report["pass"], true);
}

#[test]
fn table_verify_exits_zero() {
    let (code, stdout, _) = run_spec(r#"{"command": "table-verify"}"#, &[]);
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["results"]["admissible_rows"], 28);
}

#[test]
fn coprimality_schema_failure_exits_two() {
    let (code, _, stderr) = run_spec(
        r#"{"command": "wks-classify", "parameters": {"k": 2, "l": 4}}"#,
        &[],
    );
    assert_eq!(code, 2, "stderr: {stderr}");
    assert!(stderr.contains("coprime"));
}

#[test]
fn malformed_spec_exits_two_with_location() {
    let (code, _, stderr) = run_spec("{not json", &[]);
    assert_eq!(code, 2);
    assert!(stderr.contains("line"), "stderr: {stderr}");
}

#[test]
fn unknown_command_exits_two() {
    let (code, _, _) = run_spec(r#"{"command": "nope"}"#, &[]);
    assert_eq!(code, 2);
}

#[test]
fn boundary_and_outside_classifications() {
    // Constant eigenfunctions 2 and 5: a root at the top of the second range
    // is a boundary value, a root below the spectrum is outside.
    let spec = r#"{"command": "image-of-j",
                   "parameters": {"n": 2, "amp": 0.0, "roots": [5.0], "leading": 1.0}}"#;
    let (code, stdout, stderr) = run_spec(spec, &[]);
    assert_eq!(code, 0, "stdout: {stdout}, stderr: {stderr}");
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["results"]["class"], "boundary");

    let spec = r#"{"command": "image-of-j",
                   "parameters": {"n": 2, "amp": 0.0, "roots": [1.0], "leading": 1.0}}"#;
    let (code, stdout, _) = run_spec(spec, &[]);
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["results"]["class"], "outside");
}

#[test]
fn numerical_blowup_exits_three() {
    // A grossly under-resolved flow breaches the energy-drift bound.
    let spec = r#"{"command": "flow",
                   "parameters": {"system": "proj-tori", "n": 2,
                                  "duration": 1e6, "steps": 10}}"#;
    let (code, _, stderr) = run_spec(spec, &[]);
    assert_eq!(code, 3, "stderr: {stderr}");
}

#[test]
fn seed_flag_overrides_spec_seed() {
    let spec = r#"{"command": "involution",
                   "parameters": {"system": "proj-tori", "n": 2, "taus": 3, "states": 3},
                   "seed": 1}"#;
    let (_, with_one, _) = run_spec(spec, &[]);
    let (_, with_two, _) = run_spec(spec, &["--seed", "2"]);
    let v1: serde_json::Value = serde_json::from_str(&with_one).unwrap();
    let v2: serde_json::Value = serde_json::from_str(&with_two).unwrap();
    assert_ne!(
        v1["results"]["involution_max"],
        v2["results"]["involution_max"]
    );
}

#[test]
fn reports_are_deterministic_modulo_wall_time() {
    let spec = r#"{"command": "involution",
                   "parameters": {"system": "proj-tori", "n": 2, "taus": 3, "states": 4},
                   "seed": 9}"#;
    let (c1, out1, _) = run_spec(spec, &[]);
    let (c2, out2, _) = run_spec(spec, &[]);
    assert_eq!(c1, c2);
    let strip = |s: &str| -> String {
        s.lines()
            .filter(|l| !l.contains("wall_time_ms"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&out1), strip(&out2));
}

#[test]
fn csv_format_emits_rows() {
    let spec = r#"{"command": "esch-enumerate", "parameters": {"min": -1, "max": 1}}"#;
    let (code, stdout, _) = run_spec(spec, &["--format", "csv"]);
    assert_eq!(code, 0);
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("k,l,p,q"));
    assert!(lines.next().is_some());
}

#[test]
fn out_flag_writes_file() {
    let dir = std::env::temp_dir().join("integrable-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.json");
    let _ = std::fs::remove_file(&path);
    let spec = r#"{"command": "table-verify"}"#;
    let (code, stdout, _) = run_spec(spec, &["--out", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(report["pass"], true);
}

#[test]
fn failing_assertion_exits_one() {
    // An impossible tolerance forces the assertion to fail while the
    // computation itself succeeds.
    let spec = r#"{"command": "involution",
                   "parameters": {"system": "proj-tori", "n": 2, "taus": 3, "states": 3},
                   "tolerances": {"involution": 1e-30}}"#;
    let (code, stdout, _) = run_spec(spec, &[]);
    assert_eq!(code, 1, "stdout: {stdout}");
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["pass"], false);
}
