use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bers-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn bers(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bers"));
    cmd.args(args).env_remove("BERS_OUT_DIR");
    if let Some(dir) = env_out {
        cmd.env("BERS_OUT_DIR", dir);
    }
    cmd.output().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn kernel_artifact_embeds_command_and_config() {
    let dir = scratch("kernel");
    let out = dir.join("out");
    let o = bers(&["--out-dir", out.to_str().unwrap(), "--seed", "9", "kernel", "--domain", "disk", "--z", "0.5,0", "--zeta", "0.5,0"], None);
    assert!(o.status.success());
    let doc = stdout_json(&o);
    assert_eq!(doc["command"], "kernel");
    assert_eq!(doc["seed"], 9);
    assert_eq!(doc["config"]["seed"], 9);
    // 1/(π (1 − 0.25)²)
    let v = doc["result"]["value"][0].as_f64().unwrap();
    assert!((v - 1.0 / (std::f64::consts::PI * 0.5625)).abs() < 1e-14);
    let on_disk = std::fs::read(out.join("kernel.json")).unwrap();
    assert_eq!(on_disk, o.stdout);
}

#[test]
fn out_dir_precedence() {
    let dir = scratch("precedence");
    let (flag, env, conf) = (dir.join("flag"), dir.join("env"), dir.join("conf"));
    let config = dir.join("run.conf");
    std::fs::write(&config, format!("out_dir = {}\n", conf.display())).unwrap();
    let base = ["--config", config.to_str().unwrap(), "cayley", "--z", "0.5,0;0.1,0"];
    assert!(bers(&base, None).status.success());
    assert!(conf.join("cayley.json").exists());
    assert!(bers(&base, Some(&env)).status.success());
    assert!(env.join("cayley.json").exists());
    let mut flagged = vec!["--out-dir", flag.to_str().unwrap()];
    flagged.extend_from_slice(&base);
    assert!(bers(&flagged, Some(&env)).status.success());
    assert!(flag.join("cayley.json").exists());
}

#[test]
fn errors_are_json_with_exit_codes() {
    let dir = scratch("errors");
    let out = dir.to_str().unwrap();
    let usage = bers(&["--out-dir", out, "kernel", "--domain", "torus", "--z", "0,0", "--zeta", "0,0"], None);
    assert_eq!(usage.status.code(), Some(2));
    assert_eq!(stdout_json(&usage)["error"]["kind"], "usage");

    let domain = bers(&["--out-dir", out, "kernel", "--domain", "disk", "--z", "2,0", "--zeta", "0,0"], None);
    assert_eq!(domain.status.code(), Some(1));
    assert_eq!(stdout_json(&domain)["error"]["kind"], "domain");

    let parse = bers(&["--out-dir", out, "kernel", "--domain", "disk"], None);
    assert_eq!(parse.status.code(), Some(2));
    assert_eq!(stdout_json(&parse)["error"]["kind"], "usage");

    let config = dir.join("bad.conf");
    std::fs::write(&config, "tol = banana\n").unwrap();
    let bad = bers(&["--config", config.to_str().unwrap(), "cayley", "--z", "0,0;0,0"], None);
    assert_eq!(bad.status.code(), Some(2));
    assert_eq!(stdout_json(&bad)["error"]["kind"], "config");

    let unit = bers(&["--out-dir", out, "character", "--domain", "ball", "--point", "0.9,0;0.9,0"], None);
    assert_eq!(unit.status.code(), Some(1));
    assert_eq!(stdout_json(&unit)["error"]["kind"], "unit_obstruction");
}

#[test]
fn help_is_not_an_error() {
    let o = bers(&["--help"], None);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("klembeck"));
}

#[test]
fn tables_accompany_profiles() {
    let dir = scratch("tables");
    let out = dir.to_str().unwrap();
    let o = bers(&["--out-dir", out, "blowup", "--domain", "ball", "--x", "1,0;0,0", "--deltas", "0.1,0.01,0.001"], None);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.join("blowup.csv")).unwrap();
    assert!(csv.starts_with("delta,kernel_diagonal\n"));
    assert_eq!(csv.lines().count(), 4);
    let e = stdout_json(&o)["result"]["fit"]["exponent"].as_f64().unwrap();
    assert!((e - 3.0).abs() < 0.1);
}

#[test]
fn annulus_series_from_file() {
    let dir = scratch("series");
    let series = dir.join("s.json");
    std::fs::write(&series, r#"{"terms": [[1, 0.0, 1.0]], "tail_bound": 1e-12}"#).unwrap();
    let o = bers(&["--out-dir", dir.to_str().unwrap(), "classify-annulus", "--r", "0.5", "--series", series.to_str().unwrap()], None);
    assert!(o.status.success());
    assert_eq!(stdout_json(&o)["result"]["verdict"], "accept");
}

#[test]
fn limit_of_drifting_sequence() {
    let dir = scratch("limit");
    let seq: Vec<Value> = (1..=48)
        .map(|j| serde_json::json!({"kind": "disk", "params": {"a": [1.0 - 0.5f64.powi(j), 0.0], "theta": 0.0}}))
        .collect();
    let file = dir.join("seq.json");
    std::fs::write(&file, serde_json::to_string(&seq).unwrap()).unwrap();
    let o = bers(&["--out-dir", dir.to_str().unwrap(), "--tol", "1e-6", "limit", "--domain", "disk", "--sequence", file.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let r = &stdout_json(&o)["result"];
    assert_eq!(r["verdict"], "constant");
    assert!((r["limit"]["value"][0].as_f64().unwrap() + 1.0).abs() < 1e-6);
}

#[test]
fn mismatched_automorphism_is_rejected() {
    let dir = scratch("mismatch");
    let o = bers(
        &["--out-dir", dir.to_str().unwrap(), "bers-recover", "--domain", "ball", "--aut", r#"{"kind":"disk","params":{"a":[0.1,0],"theta":0}}"#],
        None,
    );
    assert_eq!(o.status.code(), Some(2));
}
