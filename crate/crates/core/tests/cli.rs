use std::path::Path;
use std::process::{Command, Output};

use brownscope::region::parse_pgm;
use serde_json::{json, Value};

const BERNOULLI: &str = r#"{"kind": "atomic", "support": "real", "atoms": [[-1, 0, 0.5], [1, 0, 0.5]]}"#;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_brownscope"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn setup(config: Value) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bernoulli.json"), BERNOULLI).unwrap();
    std::fs::write(dir.path().join("run.json"), serde_json::to_string_pretty(&config).unwrap()).unwrap();
    dir
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn error_json(out: &Output) -> Value {
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["exit_code"].as_i64(), out.status.code().map(i64::from));
    err
}

#[test]
fn spectest_outside_point() {
    let dir = setup(json!({"model": "add-circ", "measure": "bernoulli.json", "t": 1.0}));
    let out = run(dir.path(), &["spectest", "--config", "run.json", "--re", "3", "--im", "0"]);
    let doc = stdout_json(&out);
    assert_eq!(doc["schema"], "brownscope-spectest/1");
    assert_eq!(doc["results"][0]["verdict"], "OutsideSpectrum");
}

#[test]
fn bad_gamma_is_a_config_error() {
    let dir = setup(json!({"model": "add-elliptic", "measure": "bernoulli.json", "t": 1.0, "gamma": [2.0, 0.0]}));
    let out = run(dir.path(), &["spectest", "--config", "run.json", "--re", "3", "--im", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"]["kind"], "bad_gamma");
}

#[test]
fn missing_measure_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["lifetime", "--model", "add-circ"]);
    assert_eq!(out.status.code(), Some(2));
    error_json(&out);
}

#[test]
fn radii_past_critical_time() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("h.json"),
        r#"{"kind": "atomic", "support": "nonneg", "atoms": [[1, 0, 0.5], [2, 0, 0.5]]}"#,
    )
    .unwrap();
    let ok = run(dir.path(), &["radii", "--model", "rdiag", "--measure", "h.json", "--t", "0.5", "--format", "json"]);
    let doc = stdout_json(&ok);
    let inner = doc["inner_radius_at_t"].as_f64().unwrap();
    assert!((inner - 1.1f64.sqrt()).abs() < 1e-12);
    let late = run(dir.path(), &["radii", "--model", "rdiag", "--measure", "h.json", "--t", "1.7", "--format", "json"]);
    assert_eq!(late.status.code(), Some(2));
    assert_eq!(error_json(&late)["error"]["kind"], "t_max_exceeded");
}

#[test]
fn oracle_is_reproducible_and_hashed() {
    let config = json!({
        "model": "add-circ", "measure": "bernoulli.json", "t": 1.0,
        "oracle": {"n": 60, "k": 20, "trials": 2, "seed": 7}
    });
    let dir = setup(config);
    let a = run(dir.path(), &["oracle", "--config", "run.json"]);
    let b = run(dir.path(), &["oracle", "--config", "run.json"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let c = run(dir.path(), &["oracle", "--config", "run.json", "--seed", "8"]);
    assert_ne!(a.stdout, c.stdout);

    let doc = stdout_json(&a);
    let hash = doc["meta"]["config_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 16);
    let other = stdout_json(&c);
    assert_ne!(other["meta"]["config_hash"].as_str().unwrap(), hash);
    // writing to a file does not change the hash
    let d = run(dir.path(), &["oracle", "--config", "run.json", "--out", "o.json"]);
    assert!(d.status.success());
    let written: Value = serde_json::from_slice(&std::fs::read(dir.path().join("o.json")).unwrap()).unwrap();
    assert_eq!(written["meta"]["config_hash"].as_str().unwrap(), hash);
}

#[test]
fn lifetime_pgm_round_trip() {
    let config = json!({
        "model": "add-circ", "measure": "bernoulli.json",
        "grid": {"re_min": -2.0, "re_max": 2.0, "im_min": -1.0, "im_max": 1.0, "nx": 41, "ny": 21}
    });
    let dir = setup(config);
    let out = run(dir.path(), &["lifetime", "--config", "run.json", "--format", "pgm", "--out", "t.pgm"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let img = parse_pgm(&std::fs::read(dir.path().join("t.pgm")).unwrap()).unwrap();
    assert_eq!((img.width, img.height), (41, 21));
    let (lo, hi) = img.clamp().unwrap();
    assert!(lo <= hi);
    assert!(img.comments.iter().any(|c| c.contains("config_hash")));
    // T is symmetric under λ ↦ −λ̄, and so is the image
    let px = img.grid_order();
    for j in 0..21 {
        for i in 0..41 {
            assert_eq!(px[j * 41 + i], px[j * 41 + 40 - i]);
        }
    }
}

#[test]
fn domain_csv_lies_on_the_level_set() {
    let dir = setup(json!({"model": "add-circ", "measure": "bernoulli.json", "t": 1.0}));
    let out = run(dir.path(), &["domain", "--config", "run.json", "--format", "csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mu = brownscope::SpectralMeasure::from_json_str(BERNOULLI).unwrap();
    let mut count = 0;
    for line in text.lines().filter(|l| !l.starts_with('#')) {
        let mut cols = line.split(',');
        let (Some(Ok(re)), Some(Ok(im))) = (cols.next().map(str::parse::<f64>), cols.next().map(str::parse::<f64>)) else {
            continue;
        };
        let t = brownscope::hj_additive::lifetime_additive(&mu, brownscope::C64::new(re, im));
        assert!((t - 1.0).abs() < 1e-8, "T({re}, {im}) = {t}");
        count += 1;
    }
    assert!(count > 100);
}

#[test]
fn pgm_rejected_for_domain() {
    let dir = setup(json!({"model": "add-circ", "measure": "bernoulli.json"}));
    let out = run(dir.path(), &["domain", "--config", "run.json", "--format", "pgm"]);
    assert_eq!(out.status.code(), Some(2));
}
