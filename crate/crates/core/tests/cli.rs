use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn macrobell(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_macrobell")).args(args).env_remove("MACROBELL_THREADS").output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn dist_writes_normalized_pmf() {
    let dir = tempfile::tempdir().unwrap();
    let povm = dir.path().join("sx.json");
    std::fs::write(&povm, r#"{"outcomes":[1,-1],"effects":[[[[0.5,0],[0.5,0]],[[0.5,0],[0.5,0]]],[[[0.5,0],[-0.5,0]],[[-0.5,0],[0.5,0]]]]}"#).unwrap();
    let out = dir.path().join("w.csv");
    let o = macrobell(&["dist", "--state", "w", "--N", "400", "--povm", povm.to_str().unwrap(), "--alpha", "0.5", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&out);
    assert_eq!(header, ["x", "prob"]);
    let total: f64 = rows.iter().map(|r| r[1]).sum();
    assert!((total - 1.0).abs() < 1e-9);
    assert!(rows.windows(2).all(|w| w[0][0] < w[1][0]));
}

#[test]
fn chsh_reports_optimum() {
    let o = macrobell(&["chsh", "--coeffs", "reference", "--optimize"]);
    assert!(o.status.success());
    let v = stdout_json(&o);
    let value = v["value"].as_f64().unwrap();
    assert!((value - 2.0 * 10f64.sqrt() / std::f64::consts::PI).abs() < 1e-6, "{value}");
    assert_eq!(v["angles"].as_array().unwrap().len(), 4);
    assert!(v["correlators"]["ab"].is_number());
}

#[test]
fn chsh_with_fixed_angles_from_json() {
    let o = macrobell(&["chsh", "--coeffs", "[1]", "--angles", "[0.1, 0.2, -0.3, 0.4]"]);
    assert!(o.status.success());
    assert!(stdout_json(&o)["value"].as_f64().unwrap().abs() < 1e-15);
}

#[test]
fn local_model_discrepancy_is_tiny() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lm.csv");
    let o = macrobell(&["local-model", "--coeffs", "random", "--seed", "7", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let summary = stdout_json(&o);
    assert!(summary["max_abs_difference"].as_f64().unwrap() <= 1e-8);
    let (header, rows) = read_csv(&out);
    assert_eq!(header, ["theta_a", "theta_b", "quantum", "lhv", "difference"]);
    assert_eq!(rows.len(), 101 * 101);
}

#[test]
fn limit_noise_sweep_and_channel() {
    let dir = tempfile::tempdir().unwrap();
    let lim = dir.path().join("lim.csv");
    assert!(macrobell(&["limit", "--state", "dicke:2", "--out", lim.to_str().unwrap()]).status.success());
    assert_eq!(read_csv(&lim).0, ["x", "density"]);
    let rot = dir.path().join("rot.csv");
    assert!(macrobell(&["limit", "--state", "equal", "--alpha", "1", "--out", rot.to_str().unwrap()]).status.success());
    assert_eq!(read_csv(&rot).0, ["theta", "density"]);

    let sweep = dir.path().join("sweep.csv");
    let o = macrobell(&["noise-sweep", "--s-grid", "0,0.5", "--eps-grid", "0", "--out", sweep.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(stdout_json(&o)["monotone_in_s"], Value::Bool(true));
    let (header, rows) = read_csv(&sweep);
    assert_eq!(header, ["s", "eps", "chsh"]);
    assert!(rows[0][2] > 2.0 && rows[1][2] < rows[0][2]);

    let o = macrobell(&["channel", "--depol", "0.3"]);
    let v = stdout_json(&o);
    let expected = 1.0 / 0.49 - 1.0;
    assert!((v["s2"].as_f64().unwrap() - expected).abs() < 1e-12);
    assert!((v["phi"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-12);
}

#[test]
fn sample_writes_sidecar_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |p: &Path, threads: &'static str| {
        vec!["--threads".to_string(), threads.into(), "sample".into(), "--state".into(), "w".into(), "--N".into(), "200".into(), "--n-samples".into(), "500".into(), "--seed".into(), "11".into(), "--out".into(), p.to_str().unwrap().into()]
    };
    for (p, t) in [(&a, "1"), (&b, "3")] {
        let argv = args(p, t);
        let o = macrobell(&argv.iter().map(String::as_str).collect::<Vec<_>>());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let sidecar: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.csv.json")).unwrap()).unwrap();
    assert_eq!(sidecar["seed"], 11);
    assert_eq!(sidecar["N"], 200);
    assert_eq!(sidecar["n_samples"], 500);
    assert_eq!(read_csv(&a).1.len(), 500);
}

#[test]
fn converge_emits_ks_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ks.csv");
    let o = macrobell(&["converge", "--state", "w", "--ns", "50,200", "--n-samples", "2000", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let (header, rows) = read_csv(&out);
    assert_eq!(header, ["N", "ks"]);
    assert_eq!(rows.iter().map(|r| r[0]).collect::<Vec<_>>(), [50.0, 200.0]);
}

#[test]
fn selftest_passes() {
    for args in [&["selftest"][..], &["--selftest"][..]] {
        let o = macrobell(args);
        assert!(o.status.success());
        let text = String::from_utf8(o.stdout).unwrap();
        assert!(text.lines().count() >= 5);
        assert!(text.lines().all(|l| serde_json::from_str::<Value>(l).unwrap()["pass"] == Value::Bool(true)));
    }
}

#[test]
fn exit_codes_and_error_json() {
    assert!(macrobell(&["--help"]).status.success());
    assert!(macrobell(&["--version"]).status.success());

    let o = macrobell(&["no-such-command"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["kind"], "Usage");

    let o = macrobell(&["dist", "--N", "3", "--state", "dicke:9"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["kind"], "InvalidInput");

    let o = macrobell(&["dist", "--N", "10", "--povm", "builtin:sz"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["kind"], "DegenerateOffDiagonal");

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"outcomes":[1,-1],"effects":[[[[1,0],[0,0]],[[0,0],[1,0]]],[[[1,0],[0,0]],[[0,0],[1,0]]]],"note":1}"#).unwrap();
    let o = macrobell(&["dist", "--N", "10", "--povm", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    let o = macrobell(&["dist", "--N", "10", "--povm", "/nonexistent/povm.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["kind"], "Io");

    // a grid too narrow for the density is a numeric failure
    let o = macrobell(&["limit", "--state", "w", "--grid", "-2:2:101"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["kind"], "GridTooNarrow");
}
