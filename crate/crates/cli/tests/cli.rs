use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gyron(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gyron"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_file(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn rep_identity_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rep.json");
    let o = gyron(&[
        "rep", "--l", "2", "--m", "3", "--r", "10", "--q", "1", "--p", "2", "--hbar", "0.05", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = json_file(&out);
    assert!(doc["failures"].as_array().unwrap().is_empty());
    let rep = &doc["reps"][0];
    for (_, v) in rep["relations"].as_object().unwrap() {
        assert!(v.as_f64().unwrap() <= 1e-12);
    }
    assert_eq!(rep["rep"]["a1_diag"].as_array().unwrap().len(), 11);
}

#[test]
fn non_coprime_is_an_input_error() {
    let o = gyron(&["rep", "--l", "2", "--m", "4", "--r", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "input");
    assert!(err["failures"][0].as_str().unwrap().contains("coprime"));
}

#[test]
fn trivial_representation() {
    let o = gyron(&["rep", "--l", "1", "--m", "1", "--r", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    let rep = &doc["reps"][0]["rep"];
    assert_eq!(rep["a1_diag"].as_array().unwrap().len(), 1);
    assert!(rep["a_plus_subdiag"].as_array().unwrap().is_empty());
}

#[test]
fn missing_and_conflicting_labels() {
    assert_eq!(gyron(&["rep", "--l", "1", "--m", "2"]).status.code(), Some(2));
    assert_eq!(
        gyron(&["rep", "--l", "1", "--m", "2", "--r", "2", "--emax", "3"]).status.code(),
        Some(2)
    );
    assert_eq!(gyron(&["rep", "--l", "1", "--m", "2", "--r", "2", "--q", "1"]).status.code(), Some(2));
    assert_eq!(gyron(&["rep", "--bogus"]).status.code(), Some(2));
}

#[test]
fn energy_shell_covers_every_label() {
    let o = gyron(&["rep", "--l", "1", "--m", "2", "--hbar", "1", "--emax", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    // E = 2r + p ≤ 4 with p ∈ {0, 1}
    assert_eq!(doc["reps"].as_array().unwrap().len(), 5);
}

#[test]
fn geometry_identities_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("geo.json");
    let o = gyron(&[
        "geometry", "--l", "1", "--m", "2", "--r", "4", "--hbar", "0.1", "--grid-x", "50", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let g = &json_file(&out)["geometry"][0];
    assert!((g["omega_integral"].as_f64().unwrap() - 4.0).abs() < 1e-8);
    assert!((g["dm_integral"].as_f64().unwrap() - 5.0).abs() < 1e-4);
    assert!((g["ricci_integral"].as_f64().unwrap() + 2.0).abs() < 1e-6);
    let csv = std::fs::read_to_string(dir.path().join("geo_r4_q0_p0.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "x,k,g,ricci,L,Lk");
    assert_eq!(lines.len(), 51);
}

#[test]
fn tolerance_miss_is_reported() {
    let o = gyron(&["geometry", "--l", "1", "--m", "1", "--r", "3", "--tol-dm", "1e-30"]);
    assert_eq!(o.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "tolerance");
    assert!(err["failures"][0].as_str().unwrap().contains("dm integral"));
}

#[test]
fn spin_reference_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("levels.json");
    let o = gyron(&[
        "spectrum", "--l", "1", "--m", "1", "--r", "6", "--hbar", "0.5", "--grid-x", "30", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = json_file(&out);
    let exact: Vec<f64> = doc["exact"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    for (k, v) in exact.iter().enumerate() {
        assert!((v - 0.5 * (2.0 * k as f64 - 6.0)).abs() < 1e-10);
    }
    assert_eq!(doc["semiclassical"].as_array().unwrap().len(), 7);
    assert_eq!(doc["pairs"][3], serde_json::json!([3, 3]));
    let csv = std::fs::read_to_string(dir.path().join("levels_r6_q0_p0_area.csv")).unwrap();
    assert_eq!(csv.lines().count(), 31);
}

#[test]
fn exact_only_skips_semiclassics() {
    let o = gyron(&["spectrum", "--l", "1", "--m", "2", "--r", "5", "--hbar", "0.1", "--exact-only"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["exact"].as_array().unwrap().len(), 6);
    assert!(doc["semiclassical"].as_array().unwrap().is_empty());
    assert!(doc["max_abs_error"].is_null());
}

#[test]
fn sweep_emits_slope() {
    let o = gyron(&["spectrum", "--l", "1", "--m", "2", "--r", "5", "--hbar", "0.1", "--sweep-r", "6,12"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["convergence"].as_array().unwrap().len(), 2);
    assert!(doc["convergence_slope"].as_f64().unwrap().is_finite());
    assert_eq!(doc["convergence"][1]["r"], 12);
}

#[test]
fn double_well_exits_with_multiwell() {
    let dir = tempfile::tempdir().unwrap();
    let pert = dir.path().join("b.json");
    // A₊² + A₋² for l = m = 1
    std::fs::write(
        &pert,
        r#"{"terms":[{"nu":[0,2],"mu":[2,0],"re":1.0,"im":0.0},{"nu":[2,0],"mu":[0,2],"re":1.0,"im":0.0}]}"#,
    )
    .unwrap();
    let o = gyron(&[
        "spectrum", "--l", "1", "--m", "1", "--r", "10", "--hbar", "0.1", "--perturbation",
        pert.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "multiwell");
}

#[test]
fn non_resonant_perturbation_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let pert = dir.path().join("b.json");
    std::fs::write(&pert, r#"{"terms":[{"nu":[1,0],"mu":[0,0],"re":1.0,"im":0.0}]}"#).unwrap();
    let o = gyron(&["spectrum", "--l", "1", "--m", "2", "--r", "3", "--perturbation", pert.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let missing = gyron(&["spectrum", "--l", "1", "--m", "2", "--r", "3", "--perturbation", "/nonexistent.json"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "l = 1\nm = 1\nhbar = 0.25\nr = 4\nout = \"rep.json\"\n").unwrap();
    let o = gyron(&["rep", "--config", cfg.to_str().unwrap(), "--hbar", "2.0"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = json_file(&dir.path().join("rep.json"));
    assert_eq!(doc["reps"][0]["rep"]["hbar"], 2.0);
    assert_eq!(doc["reps"][0]["rep"]["r"], 4);

    std::fs::write(&cfg, "l = 1\nbogus = 3\n").unwrap();
    assert_eq!(gyron(&["rep", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = gyron(&["spectrum", "--l", "1", "--m", "2", "--r", "6", "--hbar", "0.1", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        (
            std::fs::read(&out).unwrap(),
            std::fs::read(sibling(&out, "r6_q0_p0_area.csv")).unwrap(),
        )
    };
    assert_eq!(run("a.json"), run("b.json"));
}

fn sibling(out: &Path, suffix: &str) -> std::path::PathBuf {
    let stem = out.file_stem().unwrap().to_string_lossy().into_owned();
    out.with_file_name(format!("{stem}_{suffix}"))
}
