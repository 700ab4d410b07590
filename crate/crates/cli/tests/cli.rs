use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

fn subspec(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subspec")).args(args).arg("--out").arg(out).output().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn lambda1_unit_square() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let r = subspec(&["--family", "euclidean", "--p", "2", "--grid", "64", "--tasks", "lambda1"], &out);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let j = json(&out.join("spectrum.json"));
    assert_eq!(j["status"], "converged");
    let l = j["lambda"][0].as_f64().unwrap();
    assert!((l - 2.0 * PI * PI).abs() <= 0.01 * 2.0 * PI * PI, "{l}");
    let csv = std::fs::read_to_string(out.join("eigenfunction.csv")).unwrap();
    assert!(csv.starts_with("i,j,x1,x2,value\n"));
    assert_eq!(csv.lines().count(), 1 + 65 * 65);
    let pgm = std::fs::read_to_string(out.join("eigenfunction.pgm")).unwrap();
    assert!(pgm.starts_with("P2\n65 65\n65535\n"));
}

#[test]
fn grushin_convergence_gaps_shrink() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("conv");
    let r = subspec(&["--family", "grushin:1", "--p", "2", "--grid", "32,64,128", "--tasks", "convergence"], &out);
    assert_eq!(r.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("convergence.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("N,lambda1,residual,iters"));
    let lam: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(lam.len(), 3);
    assert!((lam[2] - lam[1]).abs() < (lam[1] - lam[0]).abs());
    assert!(!out.join("spectrum.json").exists());
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.json");
    std::fs::write(&cfg, r#"{"family": "grushin:2", "p": 3.0, "grid": [12], "tasks": ["lambda1"]}"#).unwrap();
    let out = tmp.path().join("o");
    let r = subspec(&["--config", cfg.to_str().unwrap(), "--p", "2"], &out);
    assert_eq!(r.status.code(), Some(0));
    let j = json(&out.join("spectrum.json"));
    assert_eq!(j["p"], 2.0);
    assert_eq!(j["family"], "grushin:2");
    assert_eq!(j["resolution"], serde_json::json!([12, 12]));

    std::fs::write(&cfg, r#"{"family": "euclidean", "bogus": 1}"#).unwrap();
    let bad = tmp.path().join("bad");
    let r = subspec(&["--config", cfg.to_str().unwrap()], &bad);
    assert_eq!(r.status.code(), Some(2));
    assert!(!bad.exists());
}

#[test]
fn budget_exhaustion_exits_3_with_status() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("nc");
    let r = subspec(&["--p", "3", "--grid", "16", "--max-iter", "2", "--tasks", "lambda1"], &out);
    assert_eq!(r.status.code(), Some(3));
    let j = json(&out.join("spectrum.json"));
    assert_eq!(j["status"], "not_converged");
    assert!(j["lambda"][0].as_f64().unwrap().is_finite());
}

#[test]
fn holder_and_metric_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("h");
    let r = subspec(&["--family", "grushin:1", "--grid", "24", "--tasks", "holder,calibrate"], &out);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let h = json(&out.join("holder.json"));
    assert!(h["sources"].as_u64().unwrap() >= 8);
    for e in h["entries"].as_array().unwrap() {
        assert!(e["quotient"].as_f64().unwrap() >= 0.0);
    }
    assert_eq!(json(&out.join("spectrum.json"))["holder"], "holder.json");
    let d = std::fs::read_to_string(out.join("distance.csv")).unwrap();
    assert!(d.starts_with("i,j,x1,x2,value\n"));
    let cal = std::fs::read_to_string(out.join("calibration.csv")).unwrap();
    assert!(cal.starts_with("p,C_51,C_52,C_53,C_54\n"));
    assert_eq!(cal.lines().count(), 7);
}

#[test]
fn heisenberg_defaults_to_three_dimensions() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("heis");
    let r = subspec(&["--family", "heisenberg", "--grid", "6", "--tasks", "metric"], &out);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let d = std::fs::read_to_string(out.join("distance.csv")).unwrap();
    assert!(d.starts_with("i,j,k,x1,x2,x3,value\n"));
    let bad = tmp.path().join("bad");
    assert_eq!(subspec(&["--family", "heisenberg", "--dim", "2"], &bad).status.code(), Some(2));
    assert!(!bad.exists());
}
