use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fuchs-reduce"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn read_csv(path: &Path) -> Vec<Vec<f64>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "tau_re,tau_im,P_re,P_im,Q_re,Q_im,x_re,x_im,t_re,t_im");
    lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn list_text_flags_negative_controls() {
    let o = run(&["list"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.iter().filter(|l| !l.contains("[negative control]")).count(), 8);
    assert!(lines.iter().any(|l| l.starts_with("negative.PII_bad_y1") && l.contains("[negative control]")));
}

#[test]
fn list_family_pv() {
    let o = run(&["list", "--family", "PV"]);
    let ids: Vec<String> = stdout(&o)
        .lines()
        .map(|l| l.split_whitespace().next().unwrap().to_string())
        .collect();
    assert_eq!(ids, ["PV.y_lin", "PV.y_m1", "PVdeg.kitaev_sqrt"]);
}

#[test]
fn list_json_is_manifests() {
    let v = json(&run(&["list", "--json"]));
    let arr = v.as_array().unwrap();
    assert_eq!(arr.len(), 9);
    for m in arr {
        assert_eq!(m["schema"], "fuchs-reduce/1");
        assert!(m["id"].is_string() && m["expected_target"].is_object());
    }
}

#[test]
fn reduce_pii() {
    let o = run(&["reduce", "PII.y0"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["schema"], "fuchs-reduce/1");
    for (k, want) in [("f", "2*x"), ("h", "0"), ("R", "0"), ("M", "0"), ("case", "EQ3")] {
        assert_eq!(v[k], want, "{k}");
    }
    assert_eq!(v["target"]["kind"], "airy");
    assert_eq!(v["target"]["scale"], "4^(1/3)");
    assert_eq!(v["tau_closed_form"], "x^2 + t");
}

#[test]
fn reduce_piii_with_parameter() {
    let v = json(&run(&["reduce", "PIII.y1", "--param", "theta_inf=5/2"]));
    assert_eq!(v["target"]["kind"], "whittaker");
    let kappa = v["target_value"]["kappa"]["re"].as_f64().unwrap();
    let mu2 = v["target_value"]["mu2"]["re"].as_f64().unwrap();
    assert!((kappa - 0.75).abs() < 1e-8, "{kappa}");
    assert!((mu2 - 1.0 / 16.0).abs() < 1e-8, "{mu2}");

    let v = json(&run(&["reduce", "PIII.y1", "--param", "theta_inf=7/2"]));
    let kappa = v["target_value"]["kappa"]["re"].as_f64().unwrap();
    assert!((kappa - 1.25).abs() < 1e-8, "{kappa}");
}

#[test]
fn operational_errors_exit_two() {
    let cases: &[&[&str]] = &[
        &["reduce", "missing.id"],
        &["reduce", "PIII.y1", "--param", "nope=1"],
        &["reduce", "PIII.y1", "--param", "theta_inf=2.5"],
        &["reduce", "PII.y0", "--param", "theta=3/2"],
        &["verify", "missing.id"],
        &["verify", "PII.y0", "--tol-flow=-1"],
        &["verify", "PII.y0", "--tol-flow", "0"],
        &["sample", "PII.y0", "--out", "/nonexistent/dir/s.csv"],
        &["bogus"],
    ];
    for args in cases {
        let o = run(args);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn verify_all_passes_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["verify", "--all", "--out-dir", out]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let text = stdout(&o);
    let ids: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("PASS") || l.starts_with("FAIL"))
        .map(|l| l.split_whitespace().nth(1).unwrap())
        .collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids.len(), 8);
    assert_eq!(ids, sorted);
    for id in ids {
        let r: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join(format!("{id}.json"))).unwrap()).unwrap();
        assert_eq!(r["schema"], "fuchs-reduce/1");
        assert_eq!(r["passed"], true, "{id}");
    }
}

#[test]
fn verify_negative_control_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify", "negative.PII_bad_y1", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let r: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("negative.PII_bad_y1.json")).unwrap()).unwrap();
    assert_eq!(r["passed"], false);
    assert!(r["frobenius_max"].as_f64().unwrap() >= 1e-2);
}

#[test]
fn tolerance_below_the_floor_fails() {
    // PII.y0 reaches a few 1e-16, so only a sub-ulp tolerance trips it.
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify", "PII.y0", "--tol-independence", "1e-17", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 1);
}

#[test]
fn sample_pii_airy_potential() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.csv");
    let o = run(&["sample", "PII.y0", "--out", p.to_str().unwrap(), "-n", "64"]);
    assert_eq!(code(&o), 0);
    let rows = read_csv(&p);
    assert_eq!(rows.len(), 64);
    for r in rows {
        assert!((r[4] + r[0] / 4.0).abs() < 1e-9 && (r[5] + r[1] / 4.0).abs() < 1e-9, "{r:?}");
    }
}

#[test]
fn sample_piv_constant() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.csv");
    assert_eq!(code(&run(&["sample", "PIV.y_m2t", "--out", p.to_str().unwrap()])), 0);
    for r in read_csv(&p) {
        assert!((r[4] + 1.0).abs() < 1e-10 && r[5].abs() < 1e-10, "{r:?}");
    }
}

#[test]
fn sample_zero_rows() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.csv");
    assert_eq!(code(&run(&["sample", "PII.y0", "--out", p.to_str().unwrap(), "-n", "0"])), 0);
    assert_eq!(read_csv(&p).len(), 0);
}

#[test]
fn byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = d.path().to_str().unwrap();
        assert_eq!(code(&run(&["verify", "PIII.y1", "--seed", "42", "--out-dir", out])), 0);
        let csv = d.path().join("s.csv");
        assert_eq!(code(&run(&["sample", "PV.y_lin", "--seed", "42", "--out", csv.to_str().unwrap()])), 0);
    }
    for f in ["PIII.y1.json", "s.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let r1 = run(&["reduce", "PV.y_m1", "--seed", "42"]);
    let r2 = run(&["reduce", "PV.y_m1", "--seed", "42"]);
    assert_eq!(r1.stdout, r2.stdout);
}

#[test]
fn seed_changes_samples() {
    let d = tempfile::tempdir().unwrap();
    let (p, q) = (d.path().join("a.csv"), d.path().join("b.csv"));
    run(&["sample", "PII.y0", "--seed", "1", "--out", p.to_str().unwrap(), "-n", "3"]);
    run(&["sample", "PII.y0", "--seed", "2", "--out", q.to_str().unwrap(), "-n", "3"]);
    assert_ne!(std::fs::read(p).unwrap(), std::fs::read(q).unwrap());
}
