use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn chaoskit(args: &[&str], out: &Path) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_chaoskit"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("CHAOSKIT_THREADS", "2")
        .output()
        .unwrap();
    (o.status.code().unwrap(), String::from_utf8_lossy(&o.stderr).into_owned())
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_column(path: &Path, name: &str) -> Vec<String> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let col = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(col).unwrap().to_string()).collect()
}

#[test]
fn wiener_heat_is_parabolic() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = chaoskit(&["check-parabolicity", "--kernel", "wiener", "--a", "1", "--sigma", "1", "--grid", "64"], dir.path());
    assert_eq!(code, 0, "{err}");
    let s = json(&dir.path().join("summary.json"));
    assert_eq!(s["holds"], Value::Bool(true));
    assert!(s["first_violation_t"].is_null());
    assert!(s["delta0"].as_f64().unwrap() > 0.0);
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["command"], "check-parabolicity");
    assert_eq!(m["status"], "ok");
}

#[test]
fn violated_condition_is_reported_not_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["check-parabolicity", "--kernel", "fbm", "--H", "0.75", "--a", "0.5", "--sigma", "1", "--T", "4", "--grid", "64"];
    let (code, _) = chaoskit(&args, dir.path());
    assert_eq!(code, 0);
    let s = json(&dir.path().join("summary.json"));
    assert_eq!(s["holds"], Value::Bool(false));
    // (2a/σ²)^{1/(2H−1)} = 1
    assert!((s["first_violation_t"].as_f64().unwrap() - 1.0).abs() <= 4.0 / 64.0);
}

#[test]
fn negative_variance_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["solve-heat", "--kernel", "fbm", "--H", "0.75", "--a", "0.5", "--sigma", "1", "--T", "4", "--grid", "64"];
    let (code, err) = chaoskit(&args, dir.path());
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("negative"));
    assert!(!json(&dir.path().join("manifest.json"))["status"].as_str().unwrap().starts_with("ok"));
}

#[test]
fn bad_configuration_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(chaoskit(&["solve-sode", "--kernel", "fbm", "--H", "1.5"], dir.path()).0, 1);
    assert_eq!(chaoskit(&["solve-sode", "--grid", "0"], dir.path()).0, 1);
    assert_eq!(chaoskit(&["solve-heat", "--xgrid", "7"], dir.path()).0, 1);
    assert_eq!(chaoskit(&["solve-sode", "--config", "/nonexistent.json"], dir.path()).0, 1);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"grid": {"T": 1.0, "n": 8, "extra": 1}}"#).unwrap();
    assert_eq!(chaoskit(&["solve-sode", "--config", bad.to_str().unwrap()], dir.path()).0, 1);
    let o = Command::new(env!("CARGO_BIN_EXE_chaoskit"))
        .args(["solve-sode", "--grid", "8"])
        .arg("--out")
        .arg(dir.path())
        .env("CHAOSKIT_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sode_mean_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = chaoskit(&["solve-sode", "--kernel", "wiener", "--order", "6", "--dim", "32", "--grid", "128"], dir.path());
    assert_eq!(code, 0, "{err}");
    let mean = csv_column(&dir.path().join("moments.csv"), "mean");
    assert_eq!(mean.len(), 129);
    assert!(mean.iter().all(|m| m.parse::<f64>().unwrap() == 1.0));
    let second: f64 = csv_column(&dir.path().join("moments.csv"), "second_moment").last().unwrap().parse().unwrap();
    assert!((second - 1f64.exp()).abs() < 2e-3 * 1f64.exp(), "{second}");
}

#[test]
fn fbm_covariance_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = chaoskit(&["mc-validate", "--target", "covariance", "--kernel", "fbm", "--H", "0.75"], dir.path());
    assert_eq!(code, 0, "{err}");
    let path = dir.path().join("mc.csv");
    let q = csv_column(&path, "quantity");
    let t = csv_column(&path, "t");
    let s = csv_column(&path, "s");
    let est = csv_column(&path, "estimate");
    let se = csv_column(&path, "se");
    let mut diag = 0;
    for i in 0..q.len() {
        if q[i] == "covariance" && t[i] == s[i] {
            let t: f64 = t[i].parse().unwrap();
            let d = (est[i].parse::<f64>().unwrap() - t.powf(1.5)).abs();
            assert!(d <= 3.0 * se[i].parse::<f64>().unwrap());
            diag += 1;
        }
    }
    assert!(diag >= 3);
    assert!(csv_column(&path, "pass").iter().all(|p| p == "true"));
}

#[test]
fn other_subcommands_write_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let runs: [(&[&str], &[&str]); 5] = [
        (&["inspect-field", "--kernel", "ou-stable", "--b", "2", "--grid", "32"], &["kernel.csv", "variance.csv", "field.json"]),
        (&["integrate", "--grid", "32", "--dim", "8", "--order", "1"], &["moments.csv", "result.json", "summary.json"]),
        (&["solve-heat", "--grid", "16", "--a", "1", "--sigma", "1"], &["margin.csv", "mean.csv", "summary.json"]),
        (
            &["solve-evolution", "--grid", "16", "--order", "2", "--dim", "4", "--xgrid", "16", "--a", "1", "--sigma", "1"],
            &["energy.csv", "grades.csv", "mean.csv", "summary.json"],
        ),
        (&["mc-validate", "--target", "heat", "--grid", "16", "--n-paths", "2000"], &["mc.csv", "summary.json"]),
    ];
    for (i, (args, files)) in runs.iter().enumerate() {
        let out = dir.path().join(i.to_string());
        let (code, err) = chaoskit(args, &out);
        assert_eq!(code, 0, "{args:?}: {err}");
        for f in files.iter().chain(&["manifest.json"]) {
            assert!(out.join(f).exists(), "{args:?} missing {f}");
        }
    }
    // ∫W⋄dW has mean 0 and second moment T²/2
    let s = json(&dir.path().join("1/summary.json"));
    assert!(s["skorokhod_mean"].as_f64().unwrap().abs() < 1e-15);
    let w = csv_column(&dir.path().join("0/variance.csv"), "R");
    assert_eq!(w.len(), 33);
}

#[test]
fn replaying_a_manifest_reproduces_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let (code, _) = chaoskit(&["mc-validate", "--target", "wick-exp", "--grid", "32", "--dim", "16", "--n-paths", "3000", "--seed", "9"], &first);
    assert_eq!(code, 0);
    let cfg = dir.path().join("cfg.json");
    let manifest = json(&first.join("manifest.json"));
    fs::write(&cfg, serde_json::to_string(&manifest["config"]).unwrap()).unwrap();
    let second = dir.path().join("second");
    let o = Command::new(env!("CARGO_BIN_EXE_chaoskit"))
        .args(["replay", first.join("manifest.json").to_str().unwrap(), "--out", second.to_str().unwrap()])
        .env("CHAOSKIT_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    for f in ["mc.csv", "summary.json"] {
        assert_eq!(fs::read(first.join(f)).unwrap(), fs::read(second.join(f)).unwrap(), "{f}");
    }
    let third = dir.path().join("third");
    let (code, _) = chaoskit(&["mc-validate", "--config", cfg.to_str().unwrap()], &third);
    assert_eq!(code, 0);
    assert_eq!(fs::read(first.join("mc.csv")).unwrap(), fs::read(third.join("mc.csv")).unwrap());
}
