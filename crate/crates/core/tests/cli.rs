//! End-to-end runs of the `wyckoff` binary: gen -> train -> eval -> scan,
//! plus the exit-code contract.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wyckoff"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn gen_writes_expected_header_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.csv");
    let out_s = out.to_str().unwrap();
    let args = [
        "gen", "--phase", "tr", "--valid", "100", "--invalid", "100", "--seed", "7", "--out",
        out_s,
    ];
    let o = run(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# phase=TR seed=7\nlabel,x1,x2,x3,x4\n"));
    assert_eq!(text.lines().count(), 202);

    let first = fs::read(&out).unwrap();
    let o = run(&args);
    assert!(o.status.success());
    assert_eq!(first, fs::read(&out).unwrap(), "rerun must be byte-identical");
}

#[test]
fn gen_st_has_ten_feature_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.csv");
    let o = run(&[
        "gen",
        "--phase",
        "st",
        "--valid",
        "5",
        "--invalid",
        "5",
        "--seed",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = fs::read_to_string(&out).unwrap();
    assert!(text
        .lines()
        .nth(1)
        .unwrap()
        .ends_with("x1,x2,x3,x4,x5,x6,x7,x8,x9,x10"));
}

fn train_small(dir: &Path, phase: &str) -> (std::path::PathBuf, std::path::PathBuf) {
    let data = dir.join(format!("{phase}.csv"));
    let o = run(&[
        "gen",
        "--phase",
        phase,
        "--valid",
        "300",
        "--invalid",
        "300",
        "--seed",
        "11",
        "--out",
        data.to_str().unwrap(),
    ]);
    assert!(o.status.success());

    let model = dir.join(format!("{phase}.ckpt"));
    let hist = dir.join(format!("{phase}_hist.csv"));
    let o = run(&[
        "train",
        "--data",
        data.to_str().unwrap(),
        "--epochs",
        "2",
        "--hidden",
        "8",
        "--seed",
        "3",
        "--model-out",
        model.to_str().unwrap(),
        "--history-out",
        hist.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o);
    assert!(line.starts_with("test_loss="), "{line}");
    assert!(line.contains(" test_acc="), "{line}");
    (data, model)
}

#[test]
fn train_eval_pipeline_and_roc_file_consistency() {
    let dir = tempfile::tempdir().unwrap();
    let (data, model) = train_small(dir.path(), "tr");

    let hist = fs::read_to_string(dir.path().join("tr_hist.csv")).unwrap();
    assert_eq!(hist.lines().count(), 3); // header + 2 epochs

    let roc = dir.path().join("roc.csv");
    let o = run(&[
        "eval",
        "--model",
        model.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--roc-out",
        roc.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o);
    for key in ["loss=", "acc=", "auc=", "tp=", "fp=", "tn=", "fn="] {
        assert!(line.contains(key), "missing {key} in {line}");
    }

    // trailing # auc= line must match stdout's auc
    let roc_text = fs::read_to_string(&roc).unwrap();
    let file_auc: f64 = roc_text
        .lines()
        .last()
        .unwrap()
        .strip_prefix("# auc=")
        .unwrap()
        .parse()
        .unwrap();
    let stdout_auc: f64 = line
        .split_whitespace()
        .find_map(|t| t.strip_prefix("auc="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((file_auc - stdout_auc).abs() < 1e-12);
    assert!((0.0..=1.0).contains(&stdout_auc));
}

#[test]
fn train_deterministic_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let o = run(&[
        "gen", "--phase", "tr", "--valid", "200", "--invalid", "200", "--seed", "5", "--out",
        data.to_str().unwrap(),
    ]);
    assert!(o.status.success());

    let mut outputs = Vec::new();
    for _ in 0..2 {
        let model = dir.path().join("m.ckpt");
        let hist = dir.path().join("h.csv");
        let o = run(&[
            "train",
            "--data",
            data.to_str().unwrap(),
            "--epochs",
            "2",
            "--hidden",
            "8",
            "--seed",
            "9",
            "--deterministic",
            "--model-out",
            model.to_str().unwrap(),
            "--history-out",
            hist.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push((fs::read(&model).unwrap(), fs::read(&hist).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn eval_feature_mismatch_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let (_, model) = train_small(dir.path(), "tr");
    let st_data = dir.path().join("st.csv");
    let o = run(&[
        "gen", "--phase", "st", "--valid", "10", "--invalid", "10", "--seed", "1", "--out",
        st_data.to_str().unwrap(),
    ]);
    assert!(o.status.success());

    let o = run(&[
        "eval",
        "--model",
        model.to_str().unwrap(),
        "--data",
        st_data.to_str().unwrap(),
        "--roc-out",
        dir.path().join("r.csv").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("feature mismatch: model=4 data=10"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn missing_data_file_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "train",
        "--data",
        "/nonexistent/data.csv",
        "--model-out",
        dir.path().join("m.ckpt").to_str().unwrap(),
        "--history-out",
        dir.path().join("h.csv").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/nonexistent/data.csv"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_one() {
    let o = run(&["gen", "--phase", "xx", "--valid", "1", "--invalid", "1", "--seed", "1", "--out", "/tmp/x.csv"]);
    assert_eq!(o.status.code(), Some(1));

    let o = run(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn scan_increasing_series_yields_empty_output() {
    let dir = tempfile::tempdir().unwrap();
    let (_, model) = train_small(dir.path(), "tr");

    let ohlc = dir.path().join("ohlc.csv");
    let mut text = String::from("timestamp,open,high,low,close\n");
    for i in 0..50 {
        text.push_str(&format!("2024-01-{:02},1,2,0.5,{}\n", i % 28 + 1, i + 1));
    }
    fs::write(&ohlc, text).unwrap();

    let out = dir.path().join("scan.csv");
    let o = run(&[
        "scan",
        "--ohlc",
        ohlc.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text, "timestamp,end_index,probability,p1,p2,p3,p4\n");
}

#[test]
fn scan_malformed_ohlc_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let (_, model) = train_small(dir.path(), "tr");

    let ohlc = dir.path().join("bad.csv");
    fs::write(&ohlc, "timestamp,open,close\n2024-01-01,1,2\n").unwrap();
    let o = run(&[
        "scan",
        "--ohlc",
        ohlc.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
        "--out",
        dir.path().join("s.csv").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("high") && err.contains("low"), "{err}");
}

#[test]
fn scan_scores_swing_windows_with_timestamps() {
    let dir = tempfile::tempdir().unwrap();
    let (_, model) = train_small(dir.path(), "tr");

    // oscillating closes produce alternating swings
    let ohlc = dir.path().join("ohlc.csv");
    let mut text = String::from("timestamp,open,high,low,close\n");
    let mut closes = Vec::new();
    let mut i = 0;
    for leg in 0..12 {
        let lo = 30.0 - leg as f64; // strictly falling troughs, no plateaus
        let hi = 70.0 + leg as f64;
        for step in 0..8 {
            let t = step as f64 / 8.0;
            let c = if leg % 2 == 0 { lo + (hi - lo) * t } else { hi - (hi - lo) * t };
            closes.push(c);
            text.push_str(&format!("t{i},1,2,0.5,{c}\n"));
            i += 1;
        }
    }
    fs::write(&ohlc, text).unwrap();

    let out = dir.path().join("scan.csv");
    let o = run(&[
        "scan",
        "--ohlc",
        ohlc.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
        "-k",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert!(!rows.is_empty());
    for row in rows {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells.len(), 7);
        let end_index: usize = cells[1].parse().unwrap();
        assert_eq!(cells[0], format!("t{end_index}"));
        let p: f64 = cells[2].parse().unwrap();
        assert!(p > 0.0 && p < 1.0);
    }
}
