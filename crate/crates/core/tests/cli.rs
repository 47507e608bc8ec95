//! Exit-code and file-format contract of the `kcbc` binary.

use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_kcbc");
const SCENARIO_DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios");

fn rlc() -> String {
    format!("{SCENARIO_DIR}/rlc.json")
}

#[test]
fn missing_scenario_file_exits_1() {
    let out = Command::new(BIN)
        .args(["collect", "--scenario", "/nonexistent/nope.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn unknown_flag_exits_1() {
    let out = Command::new(BIN)
        .args(["collect", "--bogus"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn full_pipeline_collect_synth_verify_plotdata() {
    let dir = tempfile::tempdir().unwrap();
    let out_flag = dir.path().to_str().unwrap();

    // collect -> 30-row CSV
    let out = Command::new(BIN)
        .args(["collect", "--scenario", &rlc(), "--out", out_flag])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let traj = dir.path().join("rlc_trajectory.csv");
    let csv = std::fs::read_to_string(&traj).unwrap();
    assert_eq!(csv.lines().count(), 31, "header + 30 data rows");
    assert!(csv.starts_with("t,u1,u2,x1,x2,x1next,x2next"));

    // synth at the scenario's k=3 -> certified, exit 0
    let out = Command::new(BIN)
        .args([
            "synth", "--scenario", &rlc(),
            "--traj", traj.to_str().unwrap(),
            "--out", out_flag,
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = dir.path().join("rlc_k3_certificate.json");
    assert!(report.exists());

    // synth at k=1 -> exit 3, report still written with diagnostics
    let out = Command::new(BIN)
        .args([
            "synth", "--scenario", &rlc(),
            "--traj", traj.to_str().unwrap(),
            "--k", "1",
            "--out", out_flag,
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let text = std::fs::read_to_string(dir.path().join("rlc_k1_certificate.json")).unwrap();
    assert!(text.contains("NotFoundAtK"));

    // verify the certified report -> PASS, exit 0
    let out = Command::new(BIN)
        .args([
            "verify", "--scenario", &rlc(),
            "--report", report.to_str().unwrap(),
            "--traj", traj.to_str().unwrap(),
            "--out", out_flag,
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let vtext = std::fs::read_to_string(dir.path().join("rlc_k3_verification.json")).unwrap();
    assert!(vtext.contains("\"pass\": true"));

    // tamper with gamma (10x smaller) -> FAIL with exit 5
    let tampered = dir.path().join("tampered.json");
    tamper_gamma(&report, &tampered);
    let out = Command::new(BIN)
        .args([
            "verify", "--scenario", &rlc(),
            "--report", tampered.to_str().unwrap(),
            "--traj", traj.to_str().unwrap(),
            "--out", out_flag,
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(5));

    // plotdata -> three CSVs with the expected headers
    let out = Command::new(BIN)
        .args([
            "plotdata", "--scenario", &rlc(),
            "--report", report.to_str().unwrap(),
            "--runs", "5", "--horizon", "20",
            "--out", out_flag,
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let contours = std::fs::read_to_string(dir.path().join("rlc_contours.csv")).unwrap();
    assert!(contours.starts_with("set,x1,x2"));
    assert!(contours.contains("gamma,"));
    assert!(contours.contains("lambda,"));
    let regions = std::fs::read_to_string(dir.path().join("rlc_regions.csv")).unwrap();
    assert!(regions.starts_with("region,x1lo,x1hi,x2lo,x2hi"));
    let rollouts = std::fs::read_to_string(dir.path().join("rlc_rollouts.csv")).unwrap();
    assert_eq!(rollouts.lines().count(), 1 + 5 * 21, "header + 5 runs x 21 states");
}

#[test]
fn synth_reports_are_byte_identical_for_fixed_seed() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for dir in [&dir_a, &dir_b] {
        let out = Command::new(BIN)
            .args([
                "synth", "--scenario", &rlc(),
                "--seed", "0",
                "--out", dir.path().to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(dir_a.path().join("rlc_k3_certificate.json")).unwrap();
    let b = std::fs::read(dir_b.path().join("rlc_k3_certificate.json")).unwrap();
    assert_eq!(a, b);
}

fn tamper_gamma(src: &Path, dst: &Path) {
    let mut v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(src).unwrap()).unwrap();
    let gamma = v["gamma"].as_f64().unwrap();
    v["gamma"] = serde_json::json!(gamma / 10.0);
    std::fs::write(dst, serde_json::to_string(&v).unwrap()).unwrap();
}
