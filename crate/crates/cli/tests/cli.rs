use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn drsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drsim")).args(args).output().expect("spawn drsim")
}

fn core_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core")
}

fn stock(name: &str) -> String {
    core_dir().join("scenarios").join(name).display().to_string()
}

const SMALL_STUDY: &str = r#"
horizons = [1, 3, 5]
predictors = ["first", "second", "anfis"]

[trajectory]
kind = "sinusoid-weave"
duration = 20.0
tick = 0.1
position = [0.0, 0.0, 0.0]
velocity = [10.0, 0.0, 0.0]
amplitude = [0.0, 5.0, 0.0]
omega = 0.8

[train]
epochs = 20
eta = 0.01
horizon = 5
"#;

#[test]
fn run_writes_identical_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let out = drsim(&["run", &stock("weave.toml"), "--out", d.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stdout).contains("verdict              : PASS"));
    }
    for f in ["report.csv", "series.csv", "events.csv", "truth.csv"] {
        let x = fs::read(a.join(f)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, fs::read(b.join(f)).unwrap(), "{f}");
    }
    let report = fs::read_to_string(a.join("report.csv")).unwrap();
    assert!(report.starts_with("max_error,"));
}

#[test]
fn qos_failure_exits_two() {
    let text = fs::read_to_string(stock("weave.toml")).unwrap().replace("base_delay = 0.08", "base_delay = 0.15");
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("slow.toml");
    fs::write(&p, text).unwrap();
    let out = drsim(&["run", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("latency"));
}

#[test]
fn errors_exit_one() {
    assert_eq!(drsim(&["run", "/nonexistent/scenario.toml"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    fs::write(&p, "[trajectory]\nkind = \"teleport\"\n").unwrap();
    let out = drsim(&["run", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn train_then_run_with_saved_predictor() {
    let dir = tempfile::tempdir().unwrap();
    let study = dir.path().join("study.toml");
    fs::write(&study, SMALL_STUDY).unwrap();
    let net = dir.path().join("net.json");
    let out = drsim(&["train", study.to_str().unwrap(), "--save", net.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("axis,initial_loss,final_loss,epochs"));
    assert!(net.exists());

    let sc = fs::read_to_string(stock("weave.toml")).unwrap().replace(
        "th_or = 0.2",
        "th_or = 0.2\npredictor = { anfis = \"net.json\" }",
    );
    let scp = dir.path().join("anfis.toml");
    fs::write(&scp, sc).unwrap();
    let out = drsim(&["run", scp.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn compare_emits_table() {
    let dir = tempfile::tempdir().unwrap();
    let study = dir.path().join("study.toml");
    fs::write(&study, SMALL_STUDY).unwrap();
    let csv = dir.path().join("table.csv");
    let out = drsim(&["compare", study.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "horizon,first_order,second_order,anfis");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("1,"));
}

#[test]
fn sweep_rows_follow_input_order() {
    let out = drsim(&["sweep", &stock("weave.toml"), "--axis", "th_pos", "--values", "1.0,0.2,0.5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let firsts: Vec<&str> = text.lines().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(firsts, ["th_pos", "1", "0.2", "0.5"]);
}

#[test]
fn sweep_reports_bad_rows_and_axes() {
    let out = drsim(&["sweep", &stock("weave.toml"), "--axis", "loss", "--values", "0.01,2.0"]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert_eq!(drsim(&["sweep", &stock("weave.toml"), "--axis", "tick", "--values", "1"]).status.code(), Some(1));
    let out = drsim(&["sweep", &stock("weave.toml"), "--axis", "base_delay", "--values", "0.05,0.2"]);
    assert_eq!(out.status.code(), Some(2));
}
