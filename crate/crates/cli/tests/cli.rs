//! End-to-end tests of the `rwsurf` binary: exit codes, mesh layout, check
//! subsetting, and the construct → mesh-verify round trip.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rwsurf"))
}

fn s3_config(nu: usize, nv: usize) -> String {
    format!(
        r#"{{
  "ambient": {{"warping": {{"family": "constant", "value": 1.0}},
              "interval": [-2.0, 2.0], "c": 1}},
  "family": {{"kind": "spacelike-s3", "theta0": 0.6931471805599453,
             "a1": {{"family": "constant", "value": 1.0}},
             "a2": {{"family": "constant", "value": 0.0}},
             "a3": {{"family": "constant", "value": 1.0}},
             "init": [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]],
             "u0": 0.0, "v0": 0.0}},
  "grid": {{"u_range": [-1.0, 1.0], "v_range": [0.0, 1.0], "nu": {nu}, "nv": {nv}}},
  "output": {{"formats": ["csv", "obj"]}},
  "seed": 0
}}"#
    )
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

#[test]
fn construct_writes_expected_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &s3_config(33, 33));
    let out = dir.path().join("out");
    let output = run(&[
        "construct",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));

    let csv = std::fs::read_to_string(out.join("mesh.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "u,v,t,x1,x2,x3,x4");
    assert_eq!(lines.len(), 1 + 33 * 33);

    // Row at (u, v) = (0, v0 = 0): the point (0, C1).
    let row = lines[1..]
        .iter()
        .find(|l| {
            let cells: Vec<&str> = l.split(',').collect();
            cells[0].parse::<f64>().unwrap().abs() < 1e-15
                && cells[1].parse::<f64>().unwrap().abs() < 1e-15
        })
        .expect("missing (0, 0) row");
    let cells: Vec<f64> = row
        .split(',')
        .map(|c| c.trim().parse::<f64>().unwrap())
        .collect();
    assert!(cells[2].abs() < 1e-14, "t = {}", cells[2]);
    assert!((cells[3] - 1.0).abs() < 1e-12);
    assert!(cells[4].abs() < 1e-12 && cells[5].abs() < 1e-12 && cells[6].abs() < 1e-12);

    let obj = std::fs::read_to_string(out.join("mesh.obj")).unwrap();
    assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 33 * 33);
    assert_eq!(
        obj.lines().filter(|l| l.starts_with("f ")).count(),
        2 * 32 * 32
    );
}

#[test]
fn inadmissible_config_exits_2_and_names_the_violation() {
    let dir = tempfile::tempdir().unwrap();
    // a3 ≡ 0 puts the surface inside a totally geodesic hypersurface.
    let bad = s3_config(9, 9).replace(
        r#""a3": {"family": "constant", "value": 1.0}"#,
        r#""a3": {"family": "constant", "value": 0.0}"#,
    );
    let config = write_config(dir.path(), &bad);
    let output = run(&[
        "construct",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("totally geodesic"),
        "diagnostic missing: {stderr}"
    );
}

#[test]
fn verify_passes_and_supports_check_subsets() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &s3_config(7, 7));
    let out = dir.path().join("out");
    let output = run(&[
        "verify",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--checks",
        "theta,prn",
    ]);
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("[PASS] theta-law"));
    assert!(stdout.contains("[PASS] prn"));
    assert!(!stdout.contains("codazzi"));

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], serde_json::Value::Bool(true));
    assert_eq!(report["checks"].as_array().unwrap().len(), 2);
}

#[test]
fn perturbed_family_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &s3_config(7, 7));
    let output = run(&[
        "verify",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
        "--checks",
        "prn",
        "--perturb",
        "0.01",
    ]);
    assert_eq!(output.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("[FAIL] prn"));
}

#[test]
fn ambient_check_classifies_constant_curvature() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{
  "ambient": {"warping": {"family": "exponential", "scale": 1.0, "rate": 1.0},
              "interval": [-1.0, 0.5], "c": 0},
  "grid": {"u_range": [-0.9, 0.4], "v_range": [0.0, 1.0], "nu": 9, "nv": 9}
}"#,
    );
    let output = run(&[
        "ambient-check",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("constant curvature everywhere"));
}

#[test]
fn ambient_check_accepts_product_sphere() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{
  "ambient": {"warping": {"family": "constant", "value": 1.0},
              "interval": [-1.0, 1.0], "c": 1},
  "grid": {"u_range": [-0.9, 0.9], "v_range": [0.0, 1.0], "nu": 9, "nv": 9}
}"#,
    );
    let output = run(&[
        "ambient-check",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("defect nonzero: ambient admissible"));
}

#[test]
fn ambient_check_scans_for_zeros() {
    // f = t² + 1 on (0, 2): the defect (2 - 2t²)/(1 + t²)² vanishes at t = 1.
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{
  "ambient": {"warping": {"family": "polynomial", "coeffs": [1.0, 0.0, 1.0]},
              "interval": [0.0, 2.0], "c": 0},
  "grid": {"u_range": [0.1, 1.9], "v_range": [0.0, 1.0], "nu": 9, "nv": 9}
}"#,
    );
    let out = dir.path().join("out");
    let output = run(&[
        "ambient-check",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("defect vanishes"), "stdout: {stdout}");
    assert!(stdout.contains("zero set near: 1.0"), "stdout: {stdout}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("ambient.json")).unwrap()).unwrap();
    let zeros = report["zeros"].as_array().unwrap();
    assert!(zeros.iter().any(|z| (z.as_f64().unwrap() - 1.0).abs() < 1e-9));
}

#[test]
fn mesh_round_trip_reproduces_prn_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &s3_config(17, 17));
    let out = dir.path().join("out");
    let output = run(&[
        "construct",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));

    // Direct verification histogram: every interior point has dim 1.
    let direct = run(&[
        "verify",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("direct").to_str().unwrap(),
        "--checks",
        "prn",
    ]);
    assert_eq!(direct.status.code(), Some(0));
    let direct_report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("direct").join("report.json")).unwrap(),
    )
    .unwrap();
    let direct_extras = &direct_report["checks"][0]["extras"];
    assert_eq!(direct_extras["nullity_dim0"], 0.0);
    assert_eq!(direct_extras["nullity_dim2"], 0.0);
    let direct_total = direct_extras["nullity_dim1"].as_f64().unwrap();
    assert!(direct_total > 0.0);

    // Mesh-mode verification of the exported CSV: same classification.
    let mesh = run(&[
        "verify",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("meshout").to_str().unwrap(),
        "--mesh",
        out.join("mesh.csv").to_str().unwrap(),
    ]);
    assert_eq!(mesh.status.code(), Some(0));
    let mesh_report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("meshout").join("report.json")).unwrap(),
    )
    .unwrap();
    let extras = &mesh_report["checks"][0]["extras"];
    assert_eq!(extras["nullity_dim0"], 0.0);
    assert_eq!(extras["nullity_dim2"], 0.0);
    // 17×17 mesh has a 13×13 stencil interior.
    assert_eq!(extras["nullity_dim1"], 169.0);
}
