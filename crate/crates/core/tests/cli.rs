use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tscore::tensor_io::{write_run, write_tensor_as, Dtype};
use tscore::{DenseMatrix, EpochRecord};

fn tscore(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tscore")).args(args).env_remove("TSCORE_SEED").output().unwrap()
}

fn json_lines(out: &Output) -> Vec<Value> {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8_lossy(&out.stdout).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn synth(dir: &Path, extra: &[&str]) -> String {
    let p = dir.to_str().unwrap().to_string();
    let mut args = vec!["synth", "--out", &p, "--n", "60"];
    args.extend_from_slice(extra);
    json_lines(&tscore(&args));
    p
}

#[test]
fn score_emits_one_record_per_epoch() {
    let tmp = tempfile::tempdir().unwrap();
    let run = synth(tmp.path(), &["--epochs", "3"]);
    let records = json_lines(&tscore(&["score", &run]));
    assert_eq!(records.len(), 3);
    for r in &records {
        let f = |k: &str| r[k].as_f64().unwrap();
        let k = r["k"].as_u64().unwrap() as f64;
        assert!((f("t") - (-f("u") + f("h") + f("m").abs() / k.ln())).abs() < 1e-12);
        assert!(r["accuracy"].is_f64());
    }
    let one = json_lines(&tscore(&["score", &run, "--epoch", "1"]));
    assert_eq!(one, vec![records[1].clone()]);
}

#[test]
fn output_is_byte_stable() {
    let tmp = tempfile::tempdir().unwrap();
    let run = synth(tmp.path(), &["--epochs", "4"]);
    for args in [vec!["score", &run], vec!["select-epoch", &run], vec!["correlate", &run]] {
        assert_eq!(tscore(&args).stdout, tscore(&args).stdout, "{args:?}");
    }
}

#[test]
fn seed_flag_and_env_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let run = synth(tmp.path(), &["--epochs", "2"]);
    let flag = tscore(&["score", &run, "--seed", "9"]).stdout;
    let env = Command::new(env!("CARGO_BIN_EXE_tscore"))
        .args(["score", &run])
        .env("TSCORE_SEED", "9")
        .output()
        .unwrap()
        .stdout;
    assert_eq!(flag, env);
    assert_ne!(flag, tscore(&["score", &run]).stdout);
}

#[test]
fn missing_probabilities_is_an_ingestion_error() {
    let tmp = tempfile::tempdir().unwrap();
    let run = synth(tmp.path(), &["--epochs", "3"]);
    std::fs::remove_file(tmp.path().join("epoch_0001_probabilities.tsr")).unwrap();
    let out = tscore(&["score", &run]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("epoch 1"), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
}

#[test]
fn corrupt_tensor_is_an_ingestion_error() {
    let tmp = tempfile::tempdir().unwrap();
    let run = synth(tmp.path(), &["--epochs", "1"]);
    std::fs::write(tmp.path().join("epoch_0000_weights.tsr"), b"NOPE").unwrap();
    let out = tscore(&["score", &run]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bad magic"), "{}", stderr(&out));
}

#[test]
fn computation_failure_exits_one() {
    // two samples cannot support a Hopkins draw
    let tmp = tempfile::tempdir().unwrap();
    let rec = EpochRecord::new(
        0,
        DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap(),
        DenseMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap(),
        DenseMatrix::from_rows(&[[0.9, 0.1], [0.2, 0.8]]).unwrap(),
        None,
    )
    .unwrap();
    write_run(tmp.path(), "tiny", "none", BTreeMap::new(), &[rec], Dtype::F64).unwrap();
    let out = tscore(&["score", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
}

#[test]
fn simplex_bound_warning_goes_to_stderr() {
    let tmp = tempfile::tempdir().unwrap();
    let weights = DenseMatrix::from_columns(&[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]).unwrap();
    let features = DenseMatrix::new(12, 2, (0..24).map(|i| ((i * 7) % 5) as f64).collect()).unwrap();
    let probs =
        DenseMatrix::new(12, 4, (0..48).map(|i| if i % 4 == (i / 4) % 4 { 0.7 } else { 0.1 }).collect()).unwrap();
    let rec = EpochRecord::new(0, weights, features, probs, None).unwrap();
    write_run(tmp.path(), "crowded", "none", BTreeMap::new(), &[rec], Dtype::F64).unwrap();
    let out = tscore(&["score", tmp.path().to_str().unwrap()]);
    let records = json_lines(&out);
    assert_eq!(records[0]["simplex_bound_exceeded"], true);
    assert!(stderr(&out).contains("warning"), "{}", stderr(&out));
}

#[test]
fn rank_rules() {
    let tmp = tempfile::tempdir().unwrap();
    let run = synth(&tmp.path().join("a"), &["--epochs", "2"]);
    let out = tscore(&["rank", &run]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("need >= 2 runs"));

    let csv = tmp.path().join("rank.csv");
    let report = json_lines(&tscore(&["rank", &run, &run, "--csv", csv.to_str().unwrap()]));
    let entries = report[0]["entries"].as_array().unwrap();
    assert_eq!(entries[0]["t"], entries[1]["t"]);
    let text = std::fs::read_to_string(csv).unwrap();
    assert_eq!(text.lines().count(), 3);

    let other = synth(&tmp.path().join("b"), &["--epochs", "3", "--k", "2", "--d-in", "5"]);
    let out = tscore(&["rank", &run, &other]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("inconsistent class count"));
}

#[test]
fn rank_matches_sorted_scores() {
    let tmp = tempfile::tempdir().unwrap();
    let runs: Vec<String> =
        ["0", "0.5", "5"].iter().map(|l| synth(&tmp.path().join(l), &["--epochs", "4", "--lambda", l])).collect();
    let mut expected: Vec<(f64, String)> = runs
        .iter()
        .map(|r| {
            let last = json_lines(&tscore(&["score", r])).pop().unwrap();
            let manifest: Value =
                serde_json::from_str(&std::fs::read_to_string(Path::new(r).join("manifest.json")).unwrap()).unwrap();
            (last["t"].as_f64().unwrap(), manifest["run_id"].as_str().unwrap().to_string())
        })
        .collect();
    expected.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    let args: Vec<&str> = std::iter::once("rank").chain(runs.iter().map(String::as_str)).collect();
    let report = json_lines(&tscore(&args));
    let got: Vec<(f64, String)> = report[0]["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| (e["t"].as_f64().unwrap(), e["run_id"].as_str().unwrap().to_string()))
        .collect();
    assert_eq!(got, expected);
}

#[test]
fn select_epoch_rules() {
    let tmp = tempfile::tempdir().unwrap();
    let run = synth(tmp.path(), &["--epochs", "2"]);
    assert_eq!(tscore(&["select-epoch", &run]).status.code(), Some(2));
    let r = json_lines(&tscore(&["select-epoch", &run, "--tau", "2", "--zeta", "1e9"]));
    assert_eq!(r[0]["window_start_epoch"], 0);
    assert_eq!(r[0]["saturated"], true);
    assert_eq!(r[0]["saturation_trace"].as_array().unwrap().len(), 2);
    assert_eq!(tscore(&["select-epoch", &run, "--tau", "1"]).status.code(), Some(2));
}

#[test]
fn baseline_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let p = |name: &str| tmp.path().join(name).to_str().unwrap().to_string();
    let a = DenseMatrix::new(40, 2, (0..80).map(|i| ((i * 13) % 7) as f64 * 0.1).collect()).unwrap();
    let b = a.map(|v| v + 10.0).unwrap();
    write_tensor_as(&a, p("a.tsr"), Dtype::F32).unwrap();
    write_tensor_as(&b, p("b.tsr"), Dtype::F32).unwrap();
    let one_hot = DenseMatrix::from_rows(&[[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
    write_tensor_as(&one_hot, p("p.tsr"), Dtype::F64).unwrap();

    let same = json_lines(&tscore(&["baseline", "--source", &p("a.tsr"), "--target", &p("a.tsr"), "--metric", "mmd"]));
    assert!(same[0]["value"].as_f64().unwrap().abs() <= 1e-10);
    assert_eq!(same[0]["config"]["estimator"], "biased");

    let pad = json_lines(&tscore(&["baseline", "--source", &p("a.tsr"), "--target", &p("b.tsr"), "--metric", "pad"]));
    assert!(pad[0]["value"].as_f64().unwrap() >= 1.5);
    assert_eq!(pad[0]["config"]["iterations"], 500);

    let ce = json_lines(&tscore(&["baseline", "--probabilities", &p("p.tsr"), "--metric", "centropy"]));
    assert_eq!(ce[0]["value"], 0.0);

    let out = tscore(&["baseline", "--source", &p("a.tsr"), "--metric", "mmd"]);
    assert_eq!(out.status.code(), Some(2));
    let out =
        tscore(&["baseline", "--source", &p("a.tsr"), "--target", &p("a.tsr"), "--metric", "mmd", "--bandwidth", "-1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn correlate_rules() {
    let tmp = tempfile::tempdir().unwrap();
    let one = synth(&tmp.path().join("one"), &["--epochs", "1"]);
    assert_ne!(tscore(&["correlate", &one]).status.code(), Some(0));

    let run = synth(&tmp.path().join("two"), &["--epochs", "3"]);
    let manifest_path = Path::new(&run).join("manifest.json");
    let mut manifest: Value = serde_json::from_str(&std::fs::read_to_string(&manifest_path).unwrap()).unwrap();
    manifest["epochs"].as_array_mut().unwrap().iter_mut().for_each(|e| e["labels"] = Value::Null);
    std::fs::write(&manifest_path, manifest.to_string()).unwrap();
    let out = tscore(&["correlate", &run]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("labels required"));
}

#[test]
fn synth_is_deterministic_and_loadable() {
    let tmp = tempfile::tempdir().unwrap();
    let a = synth(&tmp.path().join("a"), &["--epochs", "3", "--lambda", "1"]);
    let b = synth(&tmp.path().join("b"), &["--epochs", "3", "--lambda", "1"]);
    let run = tscore::load_run(&a).unwrap();
    assert_eq!(run.len(), 3);
    run.load_all().unwrap();
    for entry in std::fs::read_dir(&a).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(
            std::fs::read(Path::new(&a).join(&name)).unwrap(),
            std::fs::read(Path::new(&b).join(&name)).unwrap(),
            "{name:?}"
        );
    }
    let out = tscore(&["synth", "--out", tmp.path().join("c").to_str().unwrap(), "--k", "1"]);
    assert_eq!(out.status.code(), Some(2));
}
