use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn coagfrag(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coagfrag"))
        .args(args)
        .env("COAGFRAG_OUTPUT_ROOT", root)
        .output()
        .unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

#[test]
fn sqrt_kernel_scenario_conserves_mass() {
    let tmp = tempfile::tempdir().unwrap();
    let out = coagfrag(tmp.path(), &["run", "mass-conservation-sqrt-kernel"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let dir = tmp.path().join("mass-conservation-sqrt-kernel");

    let report = read_json(&dir.join("reports/00-mass-drift.json"));
    let drift = report["bounds"][0]["measured"].as_f64().unwrap();
    assert!(drift < 1e-8, "{drift}");
    assert_eq!(report["bounds"][0]["status"], "pass");

    let manifest = read_json(&dir.join("manifest.json"));
    assert_eq!(manifest["status"], "completed");
    assert_eq!(manifest["scheme"], coagfrag::pde::SCHEME_VERSION);
    // Defaults the file never mentions are echoed.
    assert_eq!(manifest["scenario"]["grid"]["cells"], 1);
    assert_eq!(manifest["scenario"]["model"]["max-halvings"], 10);
    assert_eq!(manifest["scenario"]["model"]["truncation"], "conservative");
    assert_eq!(
        manifest["scenario"]["diffusion"]["scheme"],
        "implicit-euler"
    );
    assert_eq!(manifest["effective"]["steps"], 1000);
    assert!(dir.join("series/trajectory.csv").exists());
    assert!(dir.join("series/mass.csv").exists());
}

#[test]
fn multiplicative_scan_reports_gelation() {
    let tmp = tempfile::tempdir().unwrap();
    let out = coagfrag(tmp.path(), &["run", "gelation-multiplicative"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let report = read_json(
        &tmp.path()
            .join("gelation-multiplicative/reports/00-gelation-scan.json"),
    );
    assert_eq!(report["data"]["scan"]["verdict"], "gelation-consistent");
    let rows = report["data"]["scan"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r["loss"].as_f64().unwrap() > 0.05));
}

#[test]
fn stiff_scenario_fails_and_names_the_step() {
    let tmp = tempfile::tempdir().unwrap();
    let out = coagfrag(tmp.path(), &["run", "stiffness-blowup"]);
    assert_eq!(out.status.code(), Some(2));
    let err = text(&out.stderr);
    assert!(err.contains("step 1"), "{err}");
    let manifest = read_json(&tmp.path().join("stiffness-blowup/manifest.json"));
    assert_eq!(manifest["status"], "failed");
    assert!(manifest["error"].as_str().unwrap().contains("stiff"));
}

#[test]
fn violated_bound_gives_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("leaky.toml");
    fs::write(
        &file,
        r#"
[model]
n = 16
truncation = "non-conservative"

[coagulation]
family = "multiplicative"

[time]
dt = 0.01
t-final = 2.0

[[report]]
kind = "mass-drift"
"#,
    )
    .unwrap();
    let out = coagfrag(tmp.path(), &["run", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("FAIL"));
    let manifest = read_json(&tmp.path().join("leaky/manifest.json"));
    assert_eq!(manifest["status"], "bound-violated");
}

#[test]
fn csv_outputs_are_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for root in [&a, &b] {
        let out = coagfrag(root.path(), &["run", "l1-terms-constant-kernel"]);
        assert_eq!(out.status.code(), Some(0));
    }
    let series = |root: &Path| root.join("l1-terms-constant-kernel/series");
    let mut names: Vec<_> = fs::read_dir(series(a.path()))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(!names.is_empty());
    for n in names {
        let x = fs::read(series(a.path()).join(&n)).unwrap();
        let y = fs::read(series(b.path()).join(&n)).unwrap();
        assert!(x == y, "{n:?} differs");
    }
}

#[test]
fn validate_reports_located_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("bad.toml");
    fs::write(
        &file,
        "[model]\nn = 8\n\n[coagulation]\nfamily = \"constant\"\n\n[time]\ndt = 0\nt-final = 1.0\n",
    )
    .unwrap();
    let out = coagfrag(tmp.path(), &["validate", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("line 8: error: time.dt"), "{stdout}");

    let out = coagfrag(tmp.path(), &["validate", "duality-constant-kernel"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn listings() {
    let tmp = tempfile::tempdir().unwrap();
    let out = text(&coagfrag(tmp.path(), &["list-scenarios"]).stdout);
    for name in [
        "mass-conservation-sqrt-kernel",
        "gelation-multiplicative",
        "stiffness-blowup",
    ] {
        assert!(out.contains(name), "{out}");
    }
    let out = text(&coagfrag(tmp.path(), &["list-kernels"]).stdout);
    assert!(out.contains("sqrt-product") && out.contains("erosion"));
}
