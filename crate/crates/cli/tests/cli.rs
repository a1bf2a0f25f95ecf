use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_qcrsim");

fn config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../params/table1.cfg")
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).arg("--config").arg(config()).args(args).output().expect("binary runs")
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap().iter().map(str::to_string).collect()).collect()
}

fn manifest(out: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(out.with_extension("manifest.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn value(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn spectrum_reports_dressed_f0g1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let o = run(&["spectrum", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let f = rows(&out).into_iter().find(|r| r[0] == "f0g1_dressed_GHz").unwrap();
    assert!((value(&f[1]) - 2.499).abs() < 0.04);
    assert_eq!(manifest(&out)["status"], "ok");
}

#[test]
fn rpm_ground_amplitudes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let o = run(&["rpm", "--a1", "1", "--a2", "0", "--b1", "0", "--b2", "0", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(value(&rows(&out)[0][4]), 0.0);
}

#[test]
fn single_step_grid_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("k.csv");
    let o = run(&["kappa-sweep", "--steps", "1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(rows(&out).len(), 1);
}

#[test]
fn bad_input_exit_codes_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("k.csv");
    let o = run(&["kappa-sweep", "--steps", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    let m = manifest(&out);
    assert_eq!(m["status"], "failed");
    assert!(m["error"].as_str().unwrap().contains("steps"));

    let out = dir.path().join("b.csv");
    let o = run(&["kappa-sweep", "--bias-max", "3.0", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let out = dir.path().join("c.csv");
    let o = Command::new(BIN)
        .args(["--config", "/definitely/missing.cfg", "spectrum", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(manifest(&out)["status"], "failed");

    let out = dir.path().join("e.csv");
    let o = run(&["reset-sweep", "--bias-steps", "1", "--tau-max-ns", "10", "--tau-steps", "6", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let out = dir.path().join("d.csv");
    let o = run(&["rpm", "--a1", "0.2", "--a2", "0.2", "--b1", "0.3", "--b2", "0.3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn one_cell_sweep_matches_reset() {
    let dir = tempfile::tempdir().unwrap();
    let single = dir.path().join("r.csv");
    let grid = dir.path().join("g.csv");
    assert!(run(&["reset", "--tau-ns", "120", "--samples", "4", "--out", single.to_str().unwrap()]).status.success());
    let o = run(&[
        "reset-sweep", "--bias-min", "1.03", "--bias-max", "1.03", "--bias-steps", "1", "--tau-min-ns", "120",
        "--tau-max-ns", "120", "--tau-steps", "1", "--out", grid.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let g = rows(&grid);
    assert_eq!(g.len(), 1);
    let residual = manifest(&single)["summary"]["residual_p_e"].as_f64().unwrap();
    assert_eq!(value(&g[0][2]), value(&format!("{residual:.11e}")));
    assert_eq!(rows(&dir.path().join("g_contour.csv")).len(), 1);
}

#[test]
fn iv_synth_then_fit_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("iv.csv");
    let fit = dir.path().join("fit.csv");
    assert!(run(&["iv", "--synth", "1.2", "60", "--out", data.to_str().unwrap()]).status.success());
    assert_eq!(rows(&data).len(), 60);
    assert!(run(&["iv", "--fit", data.to_str().unwrap(), "--out", fit.to_str().unwrap()]).status.success());
    let r = rows(&fit);
    assert!((value(&r[0][1]) - 72.0).abs() < 1e-6);
    assert!((value(&r[1][1]) - 193.0).abs() < 1e-6);
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (out, jobs) in [(&a, "1"), (&b, "3")] {
        let o = run(&["--jobs", jobs, "kappa-sweep", "--steps", "7", "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(manifest(&a)["outputs"][0]["sha256"], manifest(&b)["outputs"][0]["sha256"]);
}

#[test]
fn t1_recovers_configured_lifetime() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t1.csv");
    assert!(run(&["t1", "--out", out.to_str().unwrap()]).status.success());
    let s = &manifest(&out)["summary"];
    assert!((s["t1_us"].as_f64().unwrap() - 9.6).abs() < 0.2);
    assert!((s["p_inf"].as_f64().unwrap() - 0.15).abs() < 0.01);
}
