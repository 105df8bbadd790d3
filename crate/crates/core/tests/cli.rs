use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::{tempdir, TempDir};

fn mobo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mobo"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(n: usize) -> (TempDir, PathBuf) {
    let dir = tempdir().unwrap();
    let data = dir.path().join("syn.jsonl");
    let n = n.to_string();
    let out = mobo(&["synth", "--seed", "1", "--n", &n, "--d", "3", "--out", s(&data)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    (dir, data)
}

#[test]
fn synth_then_validate() {
    let (_dir, data) = synth(1000);
    let out = mobo(&["validate", s(&data)]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("1000 records"), "{stdout}");
}

#[test]
fn exit_codes() {
    assert_eq!(mobo(&["run", "--bogus"]).status.code(), Some(2));
    assert_eq!(mobo(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(mobo(&["run", "--dataset", "x", "--out", "y", "--acquisition", "ucb"]).status.code(), Some(2));
    let missing = mobo(&["validate", "/definitely/not/here.jsonl"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error: "));

    let (dir, data) = synth(30);
    let too_many = mobo(&["run", "--dataset", s(&data), "--out", s(&dir.path().join("o")), "--rounds", "100"]);
    assert_eq!(too_many.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&too_many.stderr).contains("exceeds pool size"));
}

#[test]
fn config_replay_reproduces_the_run() {
    let (dir, data) = synth(120);
    let first = dir.path().join("first");
    let out = mobo(&[
        "run", "--dataset", s(&data), "--out", s(&first), "--acquisition", "scalarized-ei",
        "--seed", "9", "--rounds", "12", "--weights", "1,2,1", "--ref", "0.05,0,0",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let config: Value = serde_json::from_slice(&fs::read(first.join("config.json")).unwrap()).unwrap();
    assert_eq!(config["acquisition"]["kind"], "scalarized-ei");
    assert_eq!(config["acquisition"]["weights"][1], 0.5);
    assert_eq!(config["master_seed"], 9);
    assert_eq!(config["init_size"], 10);
    assert_eq!(config["gp"]["noise_variance"], 1e-4);

    let replay = dir.path().join("replay");
    let cfg = first.join("config.json");
    let out = mobo(&["run", "--dataset", s(&data), "--out", s(&replay), "--config", s(&cfg)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["round_log.csv", "archive.csv", "config.json", "circles.csv"] {
        assert_eq!(fs::read(first.join(f)).unwrap(), fs::read(replay.join(f)).unwrap(), "{f}");
    }

    let clash = mobo(&["run", "--dataset", s(&data), "--out", s(&replay), "--config", s(&cfg), "--rounds", "3"]);
    assert_eq!(clash.status.code(), Some(2));
}

#[test]
fn round_log_shape() {
    let (dir, data) = synth(60);
    let out_dir = dir.path().join("r");
    let out = mobo(&["run", "--dataset", s(&data), "--out", s(&out_dir), "--rounds", "5", "--mc-samples", "64"]);
    assert!(out.status.success());
    let log = fs::read_to_string(out_dir.join("round_log.csv")).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    assert_eq!(lines[0], "round,selected_id,acq_score,obj_1,obj_2,obj_3,hv,r2,wall_ms");
    assert_eq!(lines.len(), 6);
    let hv: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(6).unwrap().parse().unwrap()).collect();
    assert!(hv.windows(2).all(|w| w[1] >= w[0]));
    let archive = fs::read_to_string(out_dir.join("archive.csv")).unwrap();
    assert_eq!(archive.lines().count(), 1 + 15);
}

#[test]
fn suite_summary_and_report_agree() {
    let (dir, data) = synth(150);
    let suite = dir.path().join("suite");
    let out = mobo(&[
        "suite", "--dataset", s(&data), "--out", s(&suite), "--acquisitions", "ehvi,random",
        "--seeds", "1,2,3", "--rounds", "8", "--mc-samples", "128",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(suite.join("summary.txt")).unwrap();
    assert!(text.contains("| Task"));
    assert!(text.contains("| EHVI"));
    assert!(text.contains("| Random"));
    assert!(text.contains("Final hypervolume (mean ± std)"));
    assert!(text.contains("Effect sizes on hypervolume"));
    assert!(text.contains("#Circles"));
    let summary: Value = serde_json::from_slice(&fs::read(suite.join("summary.json")).unwrap()).unwrap();
    let delta = summary["effects"][0]["hv"]["cliffs_delta"].as_f64().unwrap();
    assert!(((delta * 9.0) - (delta * 9.0).round()).abs() < 1e-12);
    let curves = fs::read_to_string(suite.join("curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 1 + 2 * 9);

    let runs: Vec<PathBuf> = ["ehvi-seed1", "ehvi-seed2", "ehvi-seed3", "random-seed1", "random-seed2", "random-seed3"]
        .iter()
        .map(|d| suite.join("runs").join(d))
        .collect();
    let rep = dir.path().join("report");
    let mut args = vec!["report", "--out", s(&rep), "--dataset", s(&data)];
    args.extend(runs.iter().map(|p| s(p)));
    let out = mobo(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let recomputed: Value = serde_json::from_slice(&fs::read(rep.join("summary.json")).unwrap()).unwrap();
    assert_eq!(recomputed["methods"], summary["methods"]);
    assert_eq!(recomputed["effects"], summary["effects"]);

    let single = dir.path().join("single");
    let out = mobo(&[
        "suite", "--dataset", s(&data), "--out", s(&single), "--acquisitions", "random",
        "--seeds", "4", "--rounds", "3",
    ]);
    assert!(out.status.success());
    let text = fs::read_to_string(single.join("summary.txt")).unwrap();
    assert!(!text.contains("Effect sizes"));
    assert!(text.contains("fewer than two seeds"));
}

#[test]
fn report_detects_tampered_log() {
    let (dir, data) = synth(60);
    let run_dir = dir.path().join("r");
    assert!(mobo(&["run", "--dataset", s(&data), "--out", s(&run_dir), "--rounds", "3", "--acquisition", "random"]).status.success());
    let log_path = run_dir.join("round_log.csv");
    let log = fs::read_to_string(&log_path).unwrap();
    let mut lines: Vec<String> = log.lines().map(String::from).collect();
    let mut cells: Vec<String> = lines[2].split(',').map(String::from).collect();
    cells[6] = "9.9e-1".into();
    lines[2] = cells.join(",");
    fs::write(&log_path, lines.join("\n") + "\n").unwrap();
    let out = mobo(&["report", "--out", s(&dir.path().join("rep")), s(&run_dir)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("disagree"));
}
