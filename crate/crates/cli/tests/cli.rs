use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn confgeo(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_confgeo"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exited normally")
}

#[test]
fn every_subcommand_writes_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let runs: &[&[&str]] = &[
        &["mesh-info"],
        &["curvature"],
        &["energy"],
        &["distance", "--time-nodes", "16"],
        &["geodesic", "--time-nodes", "16", "--lambda", "0.5"],
        &["flow", "--t-final", "1", "--sample-every", "0.5"],
        &["oracle", "--time-nodes", "16"],
        &["check", "gaussbonnet"],
    ];
    for (k, args) in runs.iter().enumerate() {
        let out = dir.path().join(k.to_string());
        let mut full = args.to_vec();
        full.extend(["--icosphere", "2"]);
        let result = confgeo(&full, &out);
        assert_eq!(code(&result), 0, "{args:?}: {}", String::from_utf8_lossy(&result.stderr));
        let manifest = read_json(&out.join("manifest.json"));
        assert_eq!(manifest["pass"], Value::Bool(true));
        assert_eq!(manifest["config"]["command"], args[0]);
        let outputs = manifest["outputs"].as_array().unwrap();
        assert!(outputs.iter().any(|o| o["name"] == "report.json"), "{args:?}");
        for entry in outputs {
            let name = entry["name"].as_str().unwrap();
            let bytes = std::fs::read(out.join(name)).unwrap();
            assert_eq!(entry["bytes"].as_u64().unwrap(), bytes.len() as u64, "{name}");
        }
    }
}

#[test]
fn geodesic_shift_matches_closed_form_on_genus_two() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = fixture("genus2.off");
    let args = ["geodesic", "--mesh", mesh.to_str().unwrap(), "--curvature", "constant", "--shift", "0.2", "--time-nodes", "8"];
    let result = confgeo(&args, dir.path());
    assert_eq!(code(&result), 0);
    let report = read_json(&dir.path().join("report.json"));
    assert!(report["relative_error"].as_f64().unwrap() < 1e-6);
    for name in ["path.json", "path.csv", "series.csv", "fields/u0.json", "fields/u1.json"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let manifest = read_json(&dir.path().join("manifest.json"));
    let input = &manifest["inputs"][0];
    assert_eq!(input["bytes"].as_u64().unwrap(), std::fs::metadata(&mesh).unwrap().len());
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["distance", "--icosphere", "2", "--time-nodes", "16", "--seed", "7"];
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&confgeo(&args, &a)), 0);
    assert_eq!(code(&confgeo(&args, &b)), 0);
    assert_eq!(std::fs::read(a.join("report.json")).unwrap(), std::fs::read(b.join("report.json")).unwrap());
    let digests = |p: &Path| read_json(&p.join("manifest.json"))["outputs"].clone();
    assert_eq!(digests(&a), digests(&b));
}

#[test]
fn seed_changes_random_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let distance = |seed: &str| {
        let out = dir.path().join(seed);
        let args = ["distance", "--icosphere", "2", "--time-nodes", "8", "--seed", seed];
        assert_eq!(code(&confgeo(&args, &out)), 0);
        read_json(&out.join("report.json"))["solve"]["distance"].as_f64().unwrap()
    };
    assert_ne!(distance("1"), distance("2"));
}

#[test]
fn failed_assertion_exits_two_and_still_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    // The equality case needs a finer sphere than level 2 to come within tolerance.
    let result = confgeo(&["check", "andrews", "--icosphere", "2"], dir.path());
    assert_eq!(code(&result), 2);
    let report = read_json(&dir.path().join("report.json"));
    assert_eq!(report["pass"], Value::Bool(false));
    assert_eq!(read_json(&dir.path().join("manifest.json"))["pass"], Value::Bool(false));
}

#[test]
fn tolerance_flag_overrides_the_check_default() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["check", "sectional", "--icosphere", "1", "--tolerance", "1e-3"];
    assert_eq!(code(&confgeo(&args, dir.path())), 0);
    let report = read_json(&dir.path().join("report.json"));
    assert_eq!(report["checks"][0]["tolerance"].as_f64().unwrap(), 1e-3);
}

#[test]
fn usage_and_runtime_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let tetrahedron = fixture("tetrahedron.off");
    let cases: &[&[&str]] = &[
        &["no-such-command"],
        &["distance", "--time-nodes", "1"],
        &["curvature", "--icosphere", "2", "--curvature", "constant"],
        &["distance", "--icosphere", "2", "--cone", "negative"],
        &["oracle", "--mesh", tetrahedron.to_str().unwrap()],
        &["mesh-info", "--mesh", "does-not-exist.off"],
    ];
    for args in cases {
        let result = confgeo(args, out);
        assert_eq!(code(&result), 1, "{args:?}");
        assert!(!result.stderr.is_empty(), "{args:?}");
    }
    let help = Command::new(env!("CARGO_BIN_EXE_confgeo")).arg("--help").output().unwrap();
    assert_eq!(code(&help), 0);
}

#[test]
fn field_files_are_read_and_length_checked() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    assert_eq!(code(&confgeo(&["geodesic", "--icosphere", "1", "--time-nodes", "8"], &first)), 0);
    let u1 = first.join("fields/u1.json");

    let second = dir.path().join("second");
    assert_eq!(code(&confgeo(&["curvature", "--icosphere", "1", "--field", u1.to_str().unwrap()], &second)), 0);
    let manifest = read_json(&second.join("manifest.json"));
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 2);

    let wrong = dir.path().join("wrong");
    let result = confgeo(&["curvature", "--icosphere", "2", "--field", u1.to_str().unwrap()], &wrong);
    assert_eq!(code(&result), 1);
    assert!(String::from_utf8_lossy(&result.stderr).contains("vertices"));
}

#[test]
fn config_file_supplies_settings_that_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(&config, r#"{"icosphere": 1, "time-nodes": 8, "seed": 3}"#).unwrap();
    let out = dir.path().join("run");
    let args = ["distance", "--config", config.to_str().unwrap(), "--seed", "5"];
    assert_eq!(code(&confgeo(&args, &out)), 0);
    let cfg = &read_json(&out.join("manifest.json"))["config"];
    assert_eq!(cfg["surface"]["icosphere"], 1);
    assert_eq!(cfg["time-nodes"], 8);
    assert_eq!(cfg["seed"], 5);

    std::fs::write(&config, r#"{"icosphere": 1, "time_nodes": 8}"#).unwrap();
    let result = confgeo(&["distance", "--config", config.to_str().unwrap()], &out);
    assert_eq!(code(&result), 1);
}

#[test]
fn flow_distance_reports_the_series() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = fixture("genus2.off");
    let args = [
        "flow-distance",
        "--mesh",
        mesh.to_str().unwrap(),
        "--curvature",
        "constant",
        "--time-nodes",
        "8",
        "--times",
        "0,0.5,1",
    ];
    let result = confgeo(&args, dir.path());
    assert_eq!(code(&result), 0, "{}", String::from_utf8_lossy(&result.stdout));
    let csv = std::fs::read_to_string(dir.path().join("series.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("t,distance"));
}
