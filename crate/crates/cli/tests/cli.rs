//! End-to-end runs of the `trinet` binary.

use std::path::PathBuf;
use std::process::{Command, Output};

use approx::assert_abs_diff_eq;
use serde_json::Value;

fn trinet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trinet"))
        .args(args)
        .env_remove("TRINET_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}):\n{}\nstderr:\n{}",
            String::from_utf8_lossy(&o.stdout),
            String::from_utf8_lossy(&o.stderr)
        )
    })
}

fn probs(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

/// Fresh scratch directory per test.
fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("trinet-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn wdist_at_the_endpoints() {
    let o = trinet(&["wdist", "--v", "1"]);
    assert_eq!(code(&o), 0);
    let doc = json(&o);
    assert_eq!(doc["order"], "abc");
    let p = probs(&doc["p"]);
    for (i, x) in p.iter().enumerate() {
        let expected = if [1, 2, 4].contains(&i) { 1.0 / 3.0 } else { 0.0 };
        assert_abs_diff_eq!(*x, expected, epsilon = 1e-15);
    }
    let p = probs(&json(&trinet(&["wdist", "--v", "0"]))["p"]);
    assert!(p.iter().all(|x| (x - 0.125).abs() < 1e-15));
}

#[test]
fn visibility_out_of_range_is_a_usage_error() {
    let o = trinet(&["wdist", "--v", "2"]);
    assert_eq!(code(&o), 2);
    assert!(o.stdout.is_empty());
}

#[test]
fn help_succeeds() {
    let o = trinet(&["--help"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    for sub in ["wdist", "model", "seesaw", "inflate", "local", "run"] {
        assert!(text.contains(sub), "help lacks {sub}");
    }
}

#[test]
fn zero_threads_is_a_usage_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_trinet"))
        .args(["wdist", "--v", "1/2"])
        .env("TRINET_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn fitted_parameters_evaluate_to_the_target() {
    let dir = scratch("fit");
    let fit = json(&trinet(&["model", "fit", "--v", "3/10"]));
    assert!(fit["l2"].as_f64().unwrap() <= 1e-10);
    let params = dir.join("params.json");
    std::fs::write(&params, fit["params"].to_string()).unwrap();
    let eval = trinet(&["model", "eval", "--params", params.to_str().unwrap()]);
    assert_eq!(code(&eval), 0);
    let got = probs(&json(&eval)["p"]);
    let want = probs(&json(&trinet(&["wdist", "--v", "3/10"]))["p"]);
    for (g, w) in got.iter().zip(&want) {
        assert_abs_diff_eq!(g, w, epsilon = 1e-9);
    }
}

#[test]
fn scan_writes_a_tagged_csv() {
    let dir = scratch("scan");
    let o = trinet(&[
        "model",
        "scan",
        "--from",
        "0",
        "--to",
        "1/500",
        "--step",
        "1/1000",
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(std::fs::read_to_string(dir.join("scan.csv")).unwrap(), text);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# schema=trinet.scan/1"));
    let body = lines.collect::<Vec<_>>().join("\n");
    let mut rd = csv::Reader::from_reader(body.as_bytes());
    let header = rd.headers().unwrap().clone();
    let l2_col = header.iter().position(|h| h == "l2").expect("l2 column");
    let rows: Vec<_> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert!(r[l2_col].parse::<f64>().unwrap() <= 1e-10);
    }
}

#[test]
fn chsh_is_violated_at_055() {
    let doc = json(&trinet(&["model", "chsh", "--v", "0.55"]));
    assert!(doc["chsh_value"].as_f64().unwrap() > 2.0);
    assert_eq!(doc["violated"], true);
}

#[test]
fn seesaw_reaches_the_uniform_distribution() {
    let dir = scratch("seesaw");
    let o = trinet(&[
        "seesaw",
        "--w",
        "0",
        "--dim",
        "2",
        "--restarts",
        "2",
        "--max-sweeps",
        "5",
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let doc = json(&o);
    assert!(doc["l2"].as_f64().unwrap() <= 1e-8);
    assert_eq!(doc["config"]["seed"], 7);
    for r in doc["restarts"].as_array().unwrap() {
        assert_eq!(r["monotone"], true);
    }
    let traces = std::fs::read_to_string(dir.join("seesaw_traces.csv")).unwrap();
    assert!(traces.starts_with("# schema=trinet.seesaw-trace/1\n"));
    let testers: Value = serde_json::from_slice(&std::fs::read(dir.join("seesaw_testers.json")).unwrap()).unwrap();
    assert_eq!(testers.as_array().unwrap().len(), 3);
}

#[test]
fn seesaw_without_a_target_is_a_usage_error() {
    assert_eq!(code(&trinet(&["seesaw", "--dim", "2"])), 2);
}

#[test]
fn inflation_verdicts_and_exit_codes() {
    let dir = scratch("inflate");
    let o = trinet(&["inflate", "--v", "1", "--exact-certificate", "--out-dir", dir.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    let doc = json(&o);
    assert_eq!(doc["verdict"], "infeasible");
    let cert: Value = serde_json::from_slice(&std::fs::read(dir.join("certificate.json")).unwrap()).unwrap();
    assert_eq!(cert["schema"], "trinet.certificate/1");
    assert_eq!(cert["exact"], true);

    let o = trinet(&["inflate", "--v", "11/20"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["verdict"], "feasible");

    assert_eq!(code(&trinet(&["inflate", "--level", "3", "--v", "1"])), 2);
}

#[test]
fn conic_cross_check_agrees() {
    let o = trinet(&["inflate", "--v", "1", "--cross-check"]);
    assert_eq!(code(&o), 3);
    let cc = &json(&o)["cross_check"];
    assert_eq!(cc["agrees"], true);
    assert_eq!(cc["verdict"], "infeasible");
}

#[test]
fn published_local_model_round_trips_through_eval() {
    let dir = scratch("local");
    let o = trinet(&["local", "verify-appendix-b"]);
    assert_eq!(code(&o), 0);
    let doc = json(&o);
    assert_eq!(doc["passed"], true);
    let model = dir.join("model.json");
    std::fs::write(&model, doc["model"].to_string()).unwrap();
    let eval = json(&trinet(&["local", "eval", "--model", model.to_str().unwrap()]));
    for (a, b) in probs(&eval["p"]).iter().zip(probs(&doc["distribution"])) {
        assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
    }
}

#[test]
fn config_runs_match_direct_runs() {
    let dir = scratch("config");
    let cfg = dir.join("run.json");
    std::fs::write(
        &cfg,
        r#"{"command": ["seesaw"], "params": {"w": "1/2", "dim": 2, "restarts": 2, "max_sweeps": 3}}"#,
    )
    .unwrap();
    let via_config = trinet(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&via_config), 0);
    let direct = trinet(&["seesaw", "--w", "1/2", "--dim", "2", "--restarts", "2", "--max-sweeps", "3", "--seed", "7"]);
    assert_eq!(via_config.stdout, direct.stdout);

    std::fs::write(&cfg, r#"{"command": ["wdist"], "params": {"v": "1"}, "extra": 1}"#).unwrap();
    assert_eq!(code(&trinet(&["run", "--config", cfg.to_str().unwrap()])), 2);
}
