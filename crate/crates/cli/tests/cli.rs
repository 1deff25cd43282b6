//! End-to-end tests of the command-line surface: exit codes, artifact
//! shapes, and byte-level determinism of reports.

use std::path::Path;
use std::process::{Command, Output};

fn kpzlab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kpzlab"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: serde_json::Value) -> String {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(&body).unwrap()).unwrap();
    path.display().to_string()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn report_without_metadata(path: &Path) -> serde_json::Value {
    let mut v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("metadata");
    v
}

#[test]
fn simulate_runs_and_persists() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sim.json",
        serde_json::json!({
            "schema_version": 1,
            "grid_n": 31,
            "scheme": {"name": "sasamoto_spohn", "kappa": 1.0, "lambda": 0.5},
            "equation": "burgers",
            "dt": 2e-4,
            "t_end": 0.02,
            "seed": 7,
            "snapshot_stride": 25,
            "initial": {"white_invariant": {"mean": 0.0}}
        }),
    );
    let out = kpzlab(&["simulate", "--config", &cfg, "--out", "run1"], dir.path());
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("run1/trajectory.jsonl").exists());
    assert!(dir.path().join("run1/summary.csv").exists());
    let summary = std::fs::read_to_string(dir.path().join("run1/summary.csv")).unwrap();
    assert!(summary.starts_with("t,l2_norm,linf_norm,mode0\n"));
    assert!(summary.lines().count() > 2, "decaying norms recorded");
}

#[test]
fn simulate_rejects_oversized_dt_with_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sim.json",
        serde_json::json!({
            "schema_version": 1,
            "grid_n": 63,
            "scheme": {"name": "standard"},
            "equation": "burgers",
            "dt": 0.5,
            "t_end": 1.0,
            "initial": "zero"
        }),
    );
    let out = kpzlab(&["simulate", "--config", &cfg], dir.path());
    assert_eq!(code(&out), 3, "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn simulate_blow_up_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sim.json",
        serde_json::json!({
            "schema_version": 1,
            "grid_n": 15,
            "scheme": {"name": "standard"},
            "equation": "burgers",
            "dt": 1e-3,
            "t_end": 0.5,
            "seed": 3,
            "blowup_threshold": 1e-6,
            "initial": {"white_invariant": {"mean": 0.0}}
        }),
    );
    let out = kpzlab(&["simulate", "--config", &cfg], dir.path());
    assert_eq!(code(&out), 2, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = report_without_metadata(&dir.path().join("simulate_report.json"));
    assert!(report["results"]["blown_up_at"].as_f64().is_some());
}

#[test]
fn unknown_config_keys_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sim.json",
        serde_json::json!({
            "schema_version": 1,
            "grid_n": 15,
            "scheme": {"name": "standard"},
            "equation": "burgers",
            "dt": 1e-3,
            "t_end": 0.01,
            "initial": "zero",
            "not_a_real_key": 1
        }),
    );
    let out = kpzlab(&["simulate", "--config", &cfg], dir.path());
    assert_eq!(code(&out), 3);

    // Wrong schema version is also a rejection.
    let cfg = write_config(
        dir.path(),
        "sim2.json",
        serde_json::json!({
            "schema_version": 99,
            "grid_n": 15,
            "scheme": {"name": "standard"},
            "equation": "burgers",
            "dt": 1e-3,
            "t_end": 0.01,
            "initial": "zero"
        }),
    );
    let out = kpzlab(&["simulate", "--config", &cfg], dir.path());
    assert_eq!(code(&out), 3);
}

#[test]
fn invariance_small_ensemble_passes_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "inv.json",
        serde_json::json!({
            "schema_version": 1,
            "grid_n": 15,
            "replicas": 64,
            "dt": 1e-3,
            "t_end": 0.1,
            "seed": 11
        }),
    );
    let out = kpzlab(&["invariance", "--config", &cfg, "--check"], dir.path());
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = report_without_metadata(&dir.path().join("invariance_report.json"));
    assert_eq!(report["results"]["conservative"], true);
    assert!(report["results"]["warning"].is_null());
}

#[test]
fn simulate_zero_noise_norms_decay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sim.json",
        serde_json::json!({
            "schema_version": 1,
            "grid_n": 31,
            "scheme": {"name": "standard"},
            "equation": "burgers",
            "dt": 2e-4,
            "t_end": 0.05,
            "seed": 1,
            "noise": false,
            "nonlinearity": false,
            "snapshot_stride": 50,
            "initial": {"white_invariant": {"mean": 0.0}}
        }),
    );
    let out = kpzlab(&["simulate", "--config", &cfg], dir.path());
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let l2: Vec<f64> = summary
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(l2.len() > 3);
    for w in l2.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "heat flow norms must decay: {l2:?}");
    }
}

#[test]
fn invariance_shifted_mean_family() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "inv.json",
        serde_json::json!({
            "schema_version": 1,
            "grid_n": 15,
            "mean": 2.0,
            "replicas": 64,
            "dt": 1e-3,
            "t_end": 0.1,
            "seed": 23
        }),
    );
    let out = kpzlab(&["invariance", "--config", &cfg, "--check"], dir.path());
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = report_without_metadata(&dir.path().join("invariance_report.json"));
    let tests = report["results"]["tests"].as_array().unwrap();
    let mean_test = tests.iter().find(|t| t["name"] == "site_mean").unwrap();
    assert!(mean_test["detail"].as_str().unwrap().contains("target 2.0"));
}

#[test]
fn invariance_rejects_small_replica_count_and_warns_nonconservative() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "inv.json",
        serde_json::json!({
            "schema_version": 1,
            "grid_n": 15,
            "replicas": 8,
            "dt": 1e-3,
            "t_end": 0.01
        }),
    );
    let out = kpzlab(&["invariance", "--config", &cfg], dir.path());
    assert_eq!(code(&out), 3);

    // Standard preset: allowed, but flagged as non-conservative.
    let cfg = write_config(
        dir.path(),
        "inv2.json",
        serde_json::json!({
            "schema_version": 1,
            "grid_n": 15,
            "scheme": {"name": "standard"},
            "replicas": 64,
            "dt": 1e-3,
            "t_end": 0.02,
            "seed": 5
        }),
    );
    let out = kpzlab(&["invariance", "--config", &cfg], dir.path());
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = report_without_metadata(&dir.path().join("invariance_report.json"));
    assert_eq!(report["results"]["conservative"], false);
    assert!(report["results"]["warning"].as_str().is_some());
}

#[test]
fn constants_reports_and_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "const.json",
        serde_json::json!({
            "schema_version": 1,
            "scheme": {"name": "standard"},
            "quad_abs_tol": 1e-10,
            "vertex_ks": [8, 16],
            "zero_chaos_n": [255, 511]
        }),
    );
    let out = kpzlab(&["constants", "--config", &cfg, "--check"], dir.path());
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = report_without_metadata(&dir.path().join("constants_report.json"));
    let c = report["results"]["c"].as_f64().unwrap();
    assert!((c - 0.125).abs() < 1e-8);
    assert!(report["results"]["vertex_table"].as_array().unwrap().len() == 2);
    assert!(report["results"]["cancellation"]["regularized_limit"].is_f64());
}

#[test]
fn constants_inline_scheme_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    // The Sasamoto-Spohn triple in the wire format.
    let cfg = write_config(
        dir.path(),
        "const.json",
        serde_json::json!({
            "schema_version": 1,
            "scheme": {"inline": {
                "name": "inline_ss",
                "pi": [[-1, 1.0], [0, -2.0], [1, 1.0]],
                "nu": [[-1, -1.0], [0, 1.0]],
                "mu": [[0, 0, 0.3333333333333333], [1, 1, 0.3333333333333333],
                        [0, 1, 0.16666666666666666], [1, 0, 0.16666666666666666]]
            }},
            "zero_chaos_n": [63]
        }),
    );
    let out = kpzlab(&["constants", "--config", &cfg], dir.path());
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = report_without_metadata(&dir.path().join("constants_report.json"));
    let c = report["results"]["c"].as_f64().unwrap();
    assert!(c.abs() < 1e-10, "inline conservative scheme should have c = 0, got {c}");
}

#[test]
fn reports_are_deterministic_outside_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "fk.json",
        serde_json::json!({
            "schema_version": 1,
            "theta": "cos",
            "h_bar": "zero",
            "t_end": 0.1,
            "x": 0.0,
            "n_paths": 400,
            "dt_path": 1e-3,
            "seed": 21,
            "spectral_grid_n": 31
        }),
    );
    let out = kpzlab(&["feynman-kac", "--config", &cfg, "--out", "a"], dir.path());
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let out = kpzlab(&["feynman-kac", "--config", &cfg, "--out", "b"], dir.path());
    assert_eq!(code(&out), 0);
    let a = report_without_metadata(&dir.path().join("a/feynman-kac_report.json"));
    let b = report_without_metadata(&dir.path().join("b/feynman-kac_report.json"));
    assert_eq!(a, b, "reports must be identical outside the metadata section");

    // Different seeds give different numbers.
    let out = kpzlab(
        &["feynman-kac", "--config", &cfg, "--out", "c", "--seed", "99"],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let c = report_without_metadata(&dir.path().join("c/feynman-kac_report.json"));
    assert_ne!(a["results"], c["results"]);
}

#[test]
fn cole_hopf_command_checks_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "ch.json",
        serde_json::json!({
            "schema_version": 1,
            "grid_n": 31,
            "eps_reg": 0.25,
            "t_end": 0.02,
            "dts": [4e-5, 2e-5, 1e-5],
            "seed": 13
        }),
    );
    let out = kpzlab(&["cole-hopf", "--config", &cfg, "--check"], dir.path());
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = report_without_metadata(&dir.path().join("cole-hopf_report.json"));
    assert!(report["results"]["dt_order"].as_f64().unwrap() >= 0.4);
}

#[test]
fn regularity_command_small_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "reg.json",
        serde_json::json!({
            "schema_version": 1,
            "grid_n": 255,
            "replicas": 128,
            "source": "white",
            "fit_range": [2, 5],
            "seed": 17
        }),
    );
    let out = kpzlab(&["regularity", "--config", &cfg], dir.path());
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = report_without_metadata(&dir.path().join("regularity_report.json"));
    let alpha = report["results"]["alpha_hat"].as_f64().unwrap();
    assert!(alpha < 0.0, "white-noise exponent should be negative, got {alpha}");
}
