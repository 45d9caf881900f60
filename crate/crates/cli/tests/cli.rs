use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn vlmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vlmc"))
        .args(args)
        .output()
        .expect("spawn vlmc")
}

fn repo(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(rel)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn sample_then_estimate_recovers_t0() {
    let dir = TempDir::new().unwrap();
    let sample = dir.path().join("x.txt");
    let model = repo("models/t0.json");
    let out = vlmc(&[
        "sample",
        "--model",
        s(&model),
        "--n",
        "20000",
        "--seed",
        "7",
        "--out",
        s(&sample),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&sample).unwrap();
    assert_eq!(text.trim_end().len(), 20000);
    let sidecar: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("x.txt.json")).unwrap())
            .unwrap();
    assert_eq!(sidecar["seed"], 7);
    assert_eq!(sidecar["rng"], "chacha20");

    // Alphabet comes from the sidecar.
    let v = stdout_json(&vlmc(&[
        "estimate",
        "--sample",
        s(&sample),
        "--delta",
        "0.1",
        "--depth",
        "3",
    ]));
    assert_eq!(v["alphabet"], serde_json::json!(["0", "1"]));
    let words: Vec<&str> = v["contexts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["w"].as_str().unwrap())
        .collect();
    assert_eq!(words, ["0", "1"]);
    let p0 = v["contexts"][0]["p"][0].as_f64().unwrap();
    assert!((p0 - 0.8).abs() < 0.03, "{p0}");

    let v = stdout_json(&vlmc(&[
        "estimate",
        "--sample",
        s(&sample),
        "--delta",
        "0.1",
        "--depth",
        "3",
        "--K",
        "1",
        "--truth",
        s(&model),
    ]));
    assert_eq!(v["match_at_K"], true);
}

#[test]
fn same_seed_gives_same_sample() {
    let dir = TempDir::new().unwrap();
    let model = repo("models/u1.json");
    let mut texts = Vec::new();
    for name in ["a.txt", "b.txt"] {
        let p = dir.path().join(name);
        let out = vlmc(&[
            "sample",
            "--model",
            s(&model),
            "--n",
            "500",
            "--seed",
            "11",
            "--out",
            s(&p),
        ]);
        assert!(out.status.success());
        texts.push(std::fs::read_to_string(p).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn dump_counts_goes_to_stderr() {
    let dir = TempDir::new().unwrap();
    let sample = dir.path().join("x.txt");
    std::fs::write(&sample, "0101010101\n").unwrap();
    let out = vlmc(&[
        "estimate",
        "--sample",
        s(&sample),
        "--delta",
        "0.1",
        "--depth",
        "2",
        "--dump-counts",
    ]);
    let v = stdout_json(&out);
    let words: Vec<&str> = v["contexts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["w"].as_str().unwrap())
        .collect();
    assert_eq!(words, ["0", "01", "1", "10"]);
    let err = String::from_utf8(out.stderr).unwrap();
    let lines: Vec<&str> = err.lines().collect();
    assert!(lines.contains(&"0,5"), "{err}");
    assert!(lines.contains(&"01,5"), "{err}");
}

#[test]
fn analyze_reports_expected_fields() {
    let v = stdout_json(&vlmc(&[
        "analyze",
        "--model",
        s(&repo("models/t0.json")),
        "--n",
        "1000000",
    ]));
    for key in [
        "alpha_seq",
        "alpha_sum",
        "C",
        "D",
        "epsilon",
        "rho_seq",
        "rho_sum",
        "d_min",
        "bounds",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let c = v["C"].as_f64().unwrap();
    assert!((c - 1.0 / (16.0 * std::f64::consts::E)).abs() < 1e-12);
    assert_eq!(v["bounds"]["vacuous"], true);

    let v = stdout_json(&vlmc(&["analyze", "--model", s(&repo("models/u1.json"))]));
    assert!(v["bounds"].is_null());
    assert!(v["rho_sum"].as_f64().unwrap() > 1.0);
}

fn write_config(dir: &Path) -> PathBuf {
    let cfg = dir.join("cfg.json");
    let model = repo("models/t0.json");
    let text = serde_json::json!({
        "model": model,
        "n_grid": [64, 256, 1024],
        "delta": 0.1,
        "d": 2,
        "K": 1,
        "R": 12,
        "seed": 99,
    });
    std::fs::write(&cfg, text.to_string()).unwrap();
    cfg
}

#[test]
fn experiment_output_is_independent_of_threads() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path());
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(format!("out{threads}.csv"));
        let o = vlmc(&[
            "experiment",
            "--config",
            s(&cfg),
            "--out",
            s(&out),
            "--threads",
            threads,
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(std::fs::read_to_string(out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let mut lines = outputs[0].lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,failures,R,error_freq,stderr,bound,vacuous,config_hash"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("64,"));
    assert!(rows.iter().all(|r| r.split(',').count() == 8));
}

#[test]
fn summability_failure_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let comb = dir.path().join("comb.json");
    std::fs::write(
        &comb,
        r#"{"kind": "comb", "q0": 0.6, "qinf": 0.3, "gamma": 1.0}"#,
    )
    .unwrap();
    let out = vlmc(&["analyze", "--model", s(&comb)]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    // A bound outside its range is reported in place, not as a failure.
    let v = stdout_json(&vlmc(&[
        "analyze",
        "--model",
        s(&repo("models/t0.json")),
        "--n",
        "1000",
        "--delta",
        "0.5",
    ]));
    assert!(v["bounds"]["value"].is_null());
    assert!(v["bounds"]["error"].is_string());

    let sample = dir.path().join("x.txt");
    let out = vlmc(&[
        "sample",
        "--model",
        s(&repo("models/u1.json")),
        "--n",
        "100",
        "--seed",
        "1",
        "--burn-in",
        "10",
        "--out",
        s(&sample),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn invalid_input_exits_with_three() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{not json").unwrap();
    assert_eq!(
        vlmc(&["analyze", "--model", s(&bad)]).status.code(),
        Some(3)
    );
    assert_eq!(vlmc(&["estimate", "--delta", "0.1"]).status.code(), Some(3));
    assert_eq!(vlmc(&["frobnicate"]).status.code(), Some(3));

    let sample = dir.path().join("x.txt");
    std::fs::write(&sample, "0120\n").unwrap();
    let out = vlmc(&[
        "estimate",
        "--sample",
        s(&sample),
        "--delta",
        "0.1",
        "--depth",
        "1",
        "--alphabet",
        "01",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(vlmc(&["--help"]).status.code(), Some(0));
}
