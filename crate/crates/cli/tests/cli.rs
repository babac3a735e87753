use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn rcl(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rcl"))
        .args(args)
        .current_dir(cwd)
        .env_remove("RCL_ENUM_CAP")
        .output()
        .expect("spawn rcl")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("bad json ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn demo_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/demo.json")
}

fn digest_dir(dir: &Path) -> String {
    let mut entries: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    let mut h = Sha256::new();
    for p in entries {
        h.update(p.file_name().unwrap().to_string_lossy().as_bytes());
        h.update(fs::read(&p).unwrap());
    }
    format!("{:x}", h.finalize())
}

#[test]
fn check_examples() {
    let tmp = tempfile::tempdir().unwrap();
    let out = rcl(&["check", "--circulant", "10", "7", "--tlf", "2", "--set", "1,4,5"], tmp.path());
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["verdict"], true);
    assert_eq!(v["property"], "tlf");
    assert!(v["elapsed_ms"].is_number());

    let out = rcl(&["check", "--circulant", "6", "1", "--r-robust", "2"], tmp.path());
    assert_eq!(code(&out), 1);
    let v = stdout_json(&out);
    assert_eq!(v["verdict"], false);
    assert!(v["witness"]["pair"].is_array());

    let out = rcl(
        &["check", "--circulant", "30", "15", "--certificate", "strong", "--set", "22-28", "--f", "3"],
        tmp.path(),
    );
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["witness"]["window"], serde_json::json!([22, 23, 24, 25, 26, 27, 28]));
}

#[test]
fn check_errors_and_caps() {
    let tmp = tempfile::tempdir().unwrap();
    let out = rcl(&["check", "--circulant", "6", "1", "--strong", "2", "--set", "1,,2"], tmp.path());
    assert_eq!(code(&out), 2);
    let out = rcl(&["check", "--circulant", "6", "1", "--strong", "2", "--set", "9"], tmp.path());
    assert_eq!(code(&out), 2);
    let out = rcl(&["check", "--circulant", "6", "1"], tmp.path());
    assert_eq!(code(&out), 2);

    let out = rcl(&["check", "--circulant", "14", "7", "--r-robust", "4"], tmp.path());
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap"));
    let out = rcl(&["check", "--circulant", "14", "7", "--r-robust", "4", "--force"], tmp.path());
    assert_eq!(code(&out), 0);
    let out = Command::new(env!("CARGO_BIN_EXE_rcl"))
        .args(["check", "--circulant", "14", "7", "--r-robust", "4"])
        .env("RCL_ENUM_CAP", "14")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);

    // certificates need a circulant source
    let graph = tmp.path().join("g.txt");
    fs::write(&graph, "n 3\n1 2\n2 3\n3 1\n").unwrap();
    let g = graph.to_str().unwrap();
    let out = rcl(&["check", "--graph", g, "--certificate", "tlf", "--set", "1", "--f", "0"], tmp.path());
    assert_eq!(code(&out), 2);
    let out = rcl(&["check", "--graph", g, "--strong", "1", "--set", "1", "--method", "bruteforce"], tmp.path());
    assert_eq!(code(&out), 0);
    let out = rcl(&["check", "--graph", g, "--max-r"], tmp.path());
    assert_eq!(stdout_json(&out)["max_r"], 1);
}

#[test]
fn scenario_bundles() {
    let tmp = tempfile::tempdir().unwrap();
    let out = rcl(&["scenario", "sim2"], tmp.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("out/sim2");
    let metrics: Value = serde_json::from_str(&fs::read_to_string(dir.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["converged"], true);
    assert!(metrics["final_error"].as_f64().unwrap() < 1e-6);
    assert_eq!(metrics["envelope_monotone"], true);
    assert_eq!(metrics["outcome_met"], true);
    assert!(metrics["convergence_round"].is_u64());
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert!(report["preconditions"].as_array().unwrap().iter().all(|p| p["verdict"] == true));
    assert!(fs::read_to_string(dir.join("plot.svg")).unwrap().contains("<polyline"));
    let csv = fs::read_to_string(dir.join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("round,agent,role,value,reference\n"));
    assert_eq!(csv.lines().count(), 1 + 501 * 30);
    assert!(!dir.join("edges.csv").exists());

    let out = rcl(&["scenario", "counterexample-2f1", "--f", "1"], tmp.path());
    assert_eq!(code(&out), 1);
    assert_eq!(stdout_json(&out)["converged"], false);

    let out = rcl(&["scenario", "nonexistent"], tmp.path());
    assert_eq!(code(&out), 2);
}

#[test]
fn run_is_byte_reproducible() {
    let config = demo_config();
    let cfg = config.to_str().unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let out = rcl(&["run", cfg, "--seed", "7"], a.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(code(&rcl(&["run", cfg, "--seed", "7"], b.path())), 0);
    let da = a.path().join("out/demo");
    assert!(da.join("edges.csv").exists());
    assert_eq!(digest_dir(&da), digest_dir(&b.path().join("out/demo")));

    let c = tempfile::tempdir().unwrap();
    rcl(&["--threads", "1", "run", cfg, "--seed", "7"], c.path());
    assert_eq!(digest_dir(&da), digest_dir(&c.path().join("out/demo")));

    rcl(&["run", cfg, "--seed", "8"], c.path());
    assert_ne!(digest_dir(&da), digest_dir(&c.path().join("out/demo")));
}

#[test]
fn run_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(demo_config()).unwrap();

    let bad = tmp.path().join("bad.json");
    fs::write(&bad, text.replace(r#""slope": 2.0"#, r#""slope": "steep""#)).unwrap();
    let out = rcl(&["run", bad.to_str().unwrap()], tmp.path());
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("/roles/8/adversary/byzantine_per_edge/3/ramp/slope"));

    let not_local = tmp.path().join("local.json");
    fs::write(&not_local, text.replace(r#""f": 2"#, r#""f": 1"#)).unwrap();
    let out = rcl(&["run", not_local.to_str().unwrap()], tmp.path());
    assert_eq!(code(&out), 3);
}

#[test]
fn gen_graph_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let out = rcl(&["gen-graph", "--circulant", "8", "3", "--out", "c.txt"], tmp.path());
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(tmp.path().join("c.txt")).unwrap();
    assert!(text.starts_with("n 8\n"));
    assert_eq!(text.lines().count(), 1 + 24);
    let out = rcl(&["check", "--graph", "c.txt", "--r-robust", "2"], tmp.path());
    assert_eq!(code(&out), 0);

    let out = rcl(&["gen-graph", "--undirected", "8", "1,2", "--format", "json"], tmp.path());
    let v = stdout_json(&out);
    assert_eq!(v["n"], 8);
    assert_eq!(v["edges"].as_array().unwrap().len(), 32);
}

#[test]
fn sweep_examples() {
    let tmp = tempfile::tempdir().unwrap();
    let out = rcl(&["sweep", "--n", "10", "--k", "5..7", "--f", "1", "--window", "2..5"], tmp.path());
    assert_eq!(code(&out), 0);
    let csv = String::from_utf8(out.stdout).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 12);
    for row in &rows {
        if row[col("cert_strong")] == "true" {
            assert_eq!(row[col("peel_strong")], "true");
        }
        if row[col("cert_tlf")] == "true" {
            assert_eq!(row[col("peel_tlf")], "true");
        }
        // |L| = 2F leaders can never be strongly (2F+1)-robust
        if row[col("window")] == "2" {
            assert_eq!(row[col("peel_strong")], "false");
            assert_eq!(row[col("cert_strong")], "false");
        }
    }
    let order: Vec<(String, String)> = rows.iter().map(|r| (r[1].clone(), r[3].clone())).collect();
    let mut sorted = order.clone();
    sorted.sort_by_key(|(k, w)| (k.parse::<usize>().unwrap(), w.parse::<usize>().unwrap()));
    assert_eq!(order, sorted);

    let single = rcl(&["--threads", "1", "sweep", "--n", "10", "--k", "5..7", "--f", "1", "--window", "2..5"], tmp.path());
    assert_eq!(String::from_utf8(single.stdout).unwrap(), csv);

    let out = rcl(&["sweep", "--n", "", "--k", "5", "--f", "1", "--window", "3"], tmp.path());
    assert_eq!(code(&out), 0);
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "n,k,f,window,cert_strong,peel_strong,cert_tlf,peel_tlf,convergence_round,final_error\n"
    );

    let out = rcl(&["sweep", "--n", "10-60", "--k", "1-20", "--f", "0-3", "--window", "1-10", "--no-sim"], tmp.path());
    assert_eq!(code(&out), 2);
}
