use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mrisr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mrisr")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn phantom_degrade_motion_metrics_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("phantoms.json"), r#"{"count": 2, "size": 32, "ellipses": [2, 4], "intensity": [0.2, 1.0], "seed": 5}"#).unwrap();
    let o = mrisr(&["phantoms", "--config", path(&d.join("phantoms.json")), "--out", path(&d.join("ph"))]);
    assert!(o.status.success(), "{o:?}");
    let clean = d.join("ph/phantom_0000.grd");
    assert!(clean.exists() && d.join("ph/phantom_0001.grd").exists());

    fs::write(d.join("deg.json"), r#"{"sigma_k_fixed": 0.8}"#).unwrap();
    let lo = d.join("lo.grd");
    let o = mrisr(&["degrade", "--in", path(&clean), "--config", path(&d.join("deg.json")), "--seed", "1", "--out", path(&lo)]);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("\"sigma_k\":0.8"));

    let art = d.join("art.grd");
    let o = mrisr(&["motion", "--in", path(&lo), "--model", "sinusoidal", "--seed", "2", "--out", path(&art)]);
    assert!(o.status.success(), "{o:?}");

    let o = mrisr(&["metrics", "--ref", path(&clean), "--test", path(&clean)]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "psnr 99.000000\nssim 1.000000\n");

    let o = mrisr(&["metrics", "--ref", path(&clean), "--test", path(&art)]);
    let text = stdout(&o);
    let value = |key: &str| -> f64 {
        text.lines().find_map(|l| l.strip_prefix(key)).unwrap().trim().parse().unwrap()
    };
    assert!(value("psnr") < 99.0 && value("ssim") < 1.0);
}

#[test]
fn mask_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.json");
    let o = mrisr(&["mask", "--width", "180", "--R", "3", "--acs", "0.06", "--seed", "4", "--out", path(&out)]);
    assert!(o.status.success(), "{o:?}");
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(json["width"], 180);
    assert_eq!(json["R"], 3.0);
    assert_eq!(json["acs_count"], 11);
    assert_eq!(json["selected"].as_array().unwrap().len(), 60);
}

#[test]
fn train_then_enhance_writes_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("exp.json"),
        r#"{"phantoms": {"count": 2, "size": 16, "ellipses": [2, 4], "intensity": [0.2, 1.0], "seed": 0}, "test_count": 1, "train": {"epochs": 1}}"#,
    )
    .unwrap();
    let run = d.join("run");
    let o = mrisr(&["train", "--config", path(&d.join("exp.json")), "--out", path(&run)]);
    assert!(o.status.success(), "{o:?}");
    let weights = run.join("generator.wts");
    assert!(weights.exists() && run.join("train_log.csv").exists());

    fs::write(d.join("ph.json"), r#"{"count": 1, "size": 24, "ellipses": [2, 4], "intensity": [0.2, 1.0], "seed": 9}"#).unwrap();
    assert!(mrisr(&["phantoms", "--config", path(&d.join("ph.json")), "--out", path(&d.join("in"))]).status.success());
    let out = d.join("hat.grd");
    let input = d.join("in/phantom_0000.grd");
    let o = mrisr(&[
        "enhance", "--in", path(&input), "--weights", path(&weights), "--N", "3", "--R", "2", "--seed", "7", "--out", path(&out),
    ]);
    assert!(o.status.success(), "{o:?}");
    let bytes = fs::read(&out).unwrap();
    assert_eq!(bytes.len(), 12 + 24 * 24 * 4);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("hat.grd.json")).unwrap()).unwrap();
    assert_eq!(meta["N"], 3);
    assert_eq!(meta["R"], 2.0);
    assert_eq!(meta["seed"], 7);
    assert_eq!(meta["mask_seeds"].as_array().unwrap().len(), 3);

    let o = mrisr(&["enhance", "--in", path(&input), "--weights", path(&weights), "--R", "5", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let missing = d.join("missing.grd");
    let o = mrisr(&["metrics", "--ref", path(&missing), "--test", path(&missing)]);
    assert_eq!(o.status.code(), Some(3));

    fs::write(d.join("bad.grd"), b"NOPE").unwrap();
    let o = mrisr(&["metrics", "--ref", path(&d.join("bad.grd")), "--test", path(&d.join("bad.grd"))]);
    assert_eq!(o.status.code(), Some(3));

    fs::write(d.join("exp.json"), r#"{"kind": "table3"}"#).unwrap();
    let o = mrisr(&["experiment", "--config", path(&d.join("exp.json"))]);
    assert_eq!(o.status.code(), Some(2));

    fs::write(d.join("typo.json"), r#"{"kind": "simulation", "epochz": 3}"#).unwrap();
    assert_eq!(mrisr(&["experiment", "--config", path(&d.join("typo.json"))]).status.code(), Some(2));

    assert_eq!(mrisr(&["mask", "--width", "10", "--R", "9", "--acs", "0.5", "--out", path(&d.join("m.json"))]).status.code(), Some(2));
    assert_eq!(mrisr(&["bogus"]).status.code(), Some(2));

    let o = Command::new(env!("CARGO_BIN_EXE_mrisr"))
        .args(["mask", "--width", "16", "--R", "2", "--out", path(&d.join("m2.json"))])
        .env("MRISR_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_mrisr"))
        .args(["mask", "--width", "16", "--R", "2", "--out", path(&d.join("m3.json"))])
        .env("MRISR_THREADS", "1")
        .output()
        .unwrap();
    assert!(o.status.success());
}

#[test]
fn divergence_exits_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("exp.json"),
        r#"{"phantoms": {"count": 2, "size": 16, "ellipses": [2, 4], "intensity": [0.2, 1.0], "seed": 0}, "test_count": 1, "train": {"epochs": 2, "adam": {"lr": 1e30}}}"#,
    )
    .unwrap();
    let o = mrisr(&["train", "--config", path(&d.join("exp.json")), "--out", path(&d.join("run"))]);
    assert_eq!(o.status.code(), Some(4), "{o:?}");
}
