use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use subgrad_core::Instance;

fn arena(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subgrad-arena"))
        .args(args)
        .env_remove("SUBGRAD_ARENA_THREADS")
        .output()
        .unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn gd_example_reaches_epsilon_in_one_hundred_queries() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("gd.json");
    let o = arena(&["gd", "--family", "maxcoord", "--epsilon", "0.1", "--seed", "7", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out);
    assert_eq!(r["pass"], true);
    let s = &r["result"]["summary"];
    assert_eq!(s["query_count"], 100);
    assert!(s["gap"].as_f64().unwrap() <= 0.1);
    assert_eq!(r["config"]["seed"], 7);
    assert_eq!(r["library_version"], subgrad_core::VERSION);
    assert!(dir.path().join("gd.json.meta.json").exists());
}

#[test]
fn concentration_example_passes() {
    let o = arena(&["verify", "--lemma", "concentration", "--n", "1000", "--c", "0.1", "--trials", "100000"]);
    assert_eq!(o.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    let e = &r["result"]["estimates"][0];
    assert_eq!(e["lemma_id"], "concentration");
    assert!(e["empirical_probability"].as_f64().unwrap() <= 2.0 * (-5f64).exp() + 0.01);
    assert_eq!(e["pass"], true);
}

#[test]
fn reduce_example_checks_all_instances() {
    let o = arena(&["reduce", "--n", "8"]);
    assert_eq!(o.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["result"]["instances"], 256);
    assert_eq!(r["result"]["pairs_checked"], 256 * 255);
    assert_eq!(r["result"]["or_disagreements"], 0);
}

#[test]
fn reports_are_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a.csv");
    let run = |threads: &str| {
        let o = arena(&[
            "verify", "--lemma", "all", "--trials", "2000", "--seed", "3", "--format", "csv",
            "--ambient-dim", "32", "--out", out.to_str().unwrap(), "--threads", threads,
        ]);
        assert_eq!(o.status.code(), Some(0));
        (std::fs::read(&out).unwrap(), read_json(&dir.path().join("a.csv.meta.json")))
    };
    let (first, meta1) = run("1");
    let (second, meta3) = run("3");
    assert_eq!(first, second);
    assert_eq!(meta1["threads"], 1);
    assert_eq!(meta3["threads"], 3);
}

#[test]
fn thread_count_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = Command::new(env!("CARGO_BIN_EXE_subgrad-arena"))
        .args(["reduce", "--n", "4", "--out", out.to_str().unwrap()])
        .env("SUBGRAD_ARENA_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(read_json(&dir.path().join("r.json.meta.json"))["threads"], 2);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"command": "gd", "epsilon": 0.2, "seed": 4, "family": "maxcoord"}"#).unwrap();
    let o = arena(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["result"]["summary"]["query_count"], 25);
    let o = arena(&["gd", "--config", cfg.to_str().unwrap(), "--epsilon", "0.1"]);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["result"]["summary"]["query_count"], 100);
    assert_eq!(r["config"]["seed"], 4);
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"command": "gd", "learning_rate": 0.2}"#).unwrap();
    assert_eq!(arena(&["run", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(arena(&["gd", "--epsilon", "0.95"]).status.code(), Some(2));
    assert_eq!(arena(&["verify", "--trials", "0"]).status.code(), Some(2));
    assert_eq!(arena(&["gd", "--family", "simplex"]).status.code(), Some(2));
    assert_eq!(arena(&["reduce", "--n", "40"]).status.code(), Some(2));
    assert_eq!(arena(&["run"]).status.code(), Some(2));
    assert_eq!(arena(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn failed_checks_exit_with_one_and_name_the_lemma() {
    // With t = k nothing can escape, so the stress detector must fail.
    let o = arena(&["verify", "--lemma", "argmax-escape", "--stress", "--t", "4", "--trials", "200"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("argmax-escape"));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["pass"], false);
    assert_eq!(r["failing"][0], "argmax-escape");
}

#[test]
fn gen_writes_a_reloadable_instance() {
    for family in ["maxcoord", "nemyud", "wall"] {
        let o = arena(&["gen", "--family", family, "--epsilon", "0.05", "--seed", "2", "--ambient-dim", "16"]);
        assert_eq!(o.status.code(), Some(0));
        let r: Value = serde_json::from_slice(&o.stdout).unwrap();
        let inst = Instance::from_json(&r["result"].to_string()).unwrap();
        assert_eq!(inst.family().as_str(), family);
        assert_eq!(inst.epsilon(), Some(0.05));
    }
}

#[test]
fn gd_csv_is_the_trace() {
    let o = arena(&["gd", "--epsilon", "0.2", "--format", "csv"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "t,value,gap,norm");
    assert_eq!(body.len(), 26);
}

#[test]
fn sweep_table_follows_the_inverse_square_rule() {
    let o = arena(&["sweep"]);
    assert_eq!(o.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    let counts: Vec<u64> = r["result"]["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|row| row["query_count"].as_u64().unwrap())
        .collect();
    assert_eq!(counts, [25, 100, 400, 1600]);
    assert_eq!(r["result"]["fits_inverse_square"], true);
}
